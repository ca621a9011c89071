#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gdo/gdo.hpp"
#include "support/synthetic.hpp"

using namespace gdo;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

/// Deterministic texture defined on all of Z^2 so a translated copy has no
/// border artifacts.
float texture(int x, int y) {
    const std::uint64_t h = splitmix64((static_cast<std::uint64_t>(x + 4096) << 20) ^ static_cast<std::uint64_t>(y + 4096));
    return static_cast<float>(h % 256);
}

Frame textured_frame(int w, int h, int dx, int dy) {
    Frame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(x, y) = texture(x - dx, y - dy);
    return f;
}

/// Returns a fixed field per pair index.
class StubEstimator final : public FlowEstimator {
public:
    explicit StubEstimator(std::vector<float> magnitudes) : mags_(std::move(magnitudes)) {}
    FlowField estimate(const Frame& prev, const Frame&) const override {
        const float m = mags_.at(calls_++ % mags_.size());
        return FlowField(prev.width, prev.height, {m, 0.0f});
    }

private:
    std::vector<float> mags_;
    mutable std::size_t calls_ = 0;
};

class StubProbe final : public ProbeInterface {
public:
    double visual = 1.5, blind = 2.0, temporal = 0.0;
    std::vector<std::string> decodes;
    bool fail = false;

    double teacher_forced_loss(const SampleRecord& s, Condition c) const override {
        if (fail) throw ProbeError("stub failure for " + s.id);
        return c == Condition::visual ? visual : blind;
    }
    std::vector<std::string> sample_answers(const SampleRecord&, int n, std::uint64_t) const override {
        std::vector<std::string> out;
        for (int i = 0; i < n; ++i) out.push_back(decodes.at(static_cast<std::size_t>(i) % decodes.size()));
        return out;
    }
    double temporal_judgment(std::string_view) const override { return temporal; }
};

SampleRecord plain_record(const std::string& id = "s") {
    SampleRecord r;
    r.id = id;
    r.modality = Modality::image;
    r.source = "src";
    r.question = "what is it";
    r.answer = "a thing";
    return r;
}

Pool mock_pool(std::size_t n, std::uint64_t seed = 3) {
    testing::SyntheticSpec spec;
    spec.videos = n / 2;
    spec.images = n - n / 2;
    spec.seed = seed;
    auto pool = testing::synthetic_pool(spec);
    for (auto& r : pool.mutable_records()) r.descriptors.reset();
    return pool;
}

ExtractionResult run_mock(const Pool& pool, std::uint64_t seed = 11, unsigned workers = 1) {
    PipelineConfig cfg;
    ExtractionConfig ec = cfg.extraction;
    ec.seed = seed;
    ec.workers = workers;
    SyntheticFrameConfig fc = cfg.frames;
    fc.seed = seed;
    return extract_all(pool, MockProbe({.seed = seed}), SyntheticFrameSource(fc), BlockMatcher(cfg.flow), ec);
}

std::string table_bytes(const ExtractionResult& r) {
    std::ostringstream os;
    write_descriptor_table(r.pool, r.failures, os);
    return os.str();
}

} // namespace

TEST_CASE("flow: identical frames give exactly zero", "[probe][flow]") {
    const std::vector<Frame> frames(4, textured_frame(24, 24, 0, 0));
    CHECK(compute_flow(frames, BlockMatcher{}) == 0.0);
    const std::vector<Frame> flat(3, Frame(10, 10, 42.0f));
    CHECK(compute_flow(flat, BlockMatcher{}) == 0.0);
}

TEST_CASE("flow: whole-frame (3,4) translation recovers magnitude 5", "[probe][flow]") {
    const double expected = std::hypot(3.0, 4.0);
    const std::vector<Frame> frames{textured_frame(64, 64, 0, 0), textured_frame(64, 64, 3, 4)};
    const BlockMatcher bm({.block_radius = 4, .search_radius = 6});
    const double m = compute_flow(frames, bm);
    CHECK(m == Approx(expected).margin(0.25));

    // the field itself points the right way in the interior
    const auto field = bm.estimate(frames[0], frames[1]);
    const auto& v = field.vectors[static_cast<std::size_t>(32) * 64 + 32];
    CHECK(v[0] == 3.0f);
    CHECK(v[1] == 4.0f);
}

TEST_CASE("flow: mean over adjacent pairs", "[probe][flow]") {
    const std::vector<Frame> frames(3, Frame(4, 4));
    CHECK(compute_flow(frames, StubEstimator({1.0f, 3.0f})) == Approx(2.0));
    // scaling every displacement by k scales the result by k
    CHECK(compute_flow(frames, StubEstimator({2.5f, 7.5f})) == Approx(2.5 * 2.0));
}

TEST_CASE("flow: rejects short or mismatched sequences", "[probe][flow]") {
    const std::vector<Frame> one{Frame(4, 4)};
    CHECK_THROWS_AS(compute_flow(one, BlockMatcher{}), Error);
    const std::vector<Frame> mismatch{Frame(4, 4), Frame(5, 4)};
    CHECK_THROWS_AS(compute_flow(mismatch, BlockMatcher{}), Error);
}

TEST_CASE("frame diversity is the population std of frame means", "[probe][flow]") {
    const std::vector<Frame> frames{Frame(2, 2, 1.0f), Frame(2, 2, 3.0f)};
    CHECK(frame_diversity(frames) == Approx(1.0));
    CHECK(frame_diversity(std::vector<Frame>(3, Frame(2, 2, 9.0f))) == 0.0);
}

TEST_CASE("vds is the blind minus video loss gap", "[probe]") {
    StubProbe p;
    const auto v = compute_vds(plain_record(), p);
    CHECK(v.gap == 0.5);
    CHECK(v.loss_video == 1.5);
    CHECK(v.loss_blind == 2.0);
    p.blind = p.visual;
    CHECK(compute_vds(plain_record(), p).gap == 0.0);
}

TEST_CASE("tnc clamps probe output into [0,1]", "[probe]") {
    StubProbe p;
    p.temporal = 1.2;
    CHECK(compute_tnc("what happens", p) == 1.0);
    p.temporal = -0.3;
    CHECK(compute_tnc("what happens", p) == 0.0);
    p.temporal = std::nan("");
    CHECK_THROWS_AS(compute_tnc("q", p), ProbeError);
}

TEST_CASE("keyword mock temporal judgments follow the documented rule table", "[probe]") {
    const MockProbe mock;
    // base only
    CHECK(mock.temporal_judgment("what color is the car") == Approx(0.1));
    CHECK(mock.temporal_judgment("what color is the car") < 0.5);
    // base + "after" + "happens"
    CHECK(mock.temporal_judgment("what happens after he opens the door") == Approx(0.1 + 0.5 + 0.3));
    CHECK(mock.temporal_judgment("what happens after he opens the door") >= 0.5);
    // two-word phrase and clamping
    CHECK(mock.temporal_judgment("how long before the first change") == 1.0);
}

TEST_CASE("self-consistency is the mean pairwise Jaccard of decodes", "[probe]") {
    StubProbe p;
    p.decodes = {"the red car"};
    CHECK(compute_self_consistency(plain_record(), p, 5, 0) == 1.0);
    p.decodes = {"a b", "c d"};
    CHECK(compute_self_consistency(plain_record(), p, 2, 0) == 0.0);
    p.decodes = {"a b", "a c"};
    CHECK(compute_self_consistency(plain_record(), p, 2, 0) == Approx(1.0 / 3.0));
    CHECK_THROWS_AS(compute_self_consistency(plain_record(), p, 1, 0), Error);

    const std::vector<std::string> d{"a b c", "b c d", "x", "a, B!"};
    std::vector<std::string> rev(d.rbegin(), d.rend());
    CHECK(mean_pairwise_jaccard(d) == Approx(mean_pairwise_jaccard(rev)).epsilon(1e-15));
    CHECK(mean_pairwise_jaccard(d) >= 0.0);
    CHECK(mean_pairwise_jaccard(d) <= 1.0);
}

TEST_CASE("ppl is the exponentiated video loss", "[probe]") {
    CHECK(compute_ppl(0.0) == 1.0);
    CHECK(compute_ppl(std::log(2.0)) == Approx(2.0).epsilon(1e-15));
}

TEST_CASE("coverage: singleton pool gets the density weight", "[probe][coverage]") {
    Pool pool({plain_record("only")});
    const CoverageConfig cfg;
    const auto idx = build_neighbor_index(pool, cfg);
    const double c = compute_coverage(0, "src", idx, SourceHistogram::of(pool), cfg);
    CHECK(c == Approx(cfg.density_weight));
}

TEST_CASE("coverage: a dominant source lowers coverage", "[probe][coverage]") {
    // Same embedding for the two probes; only the source share differs.
    std::vector<Embedding> text(100, Embedding{1.0, 0.0}), vision(100, Embedding{0.0, 1.0});
    const auto idx = NeighborIndex::build(text, vision, 0.5);
    SourceHistogram h;
    h.add("big", 90);
    h.add("rare", 1);
    h.add("other", 9);
    CHECK(compute_coverage(0, "big", idx, h) < compute_coverage(0, "rare", idx, h));

    // decreasing a source's share never decreases coverage
    double prev = -1.0;
    for (int share = 90; share >= 2; share -= 11) {
        SourceHistogram g;
        g.add("s", static_cast<std::size_t>(share));
        g.add("rest", 100 - static_cast<std::size_t>(share));
        const double c = compute_coverage(0, "s", idx, g);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("coverage: an outlier beats members of a dense cluster", "[probe][coverage]") {
    // 19 points near (1,0,...) plus one far away, brute-force neighbor counts as oracle.
    std::vector<Embedding> text, vision;
    std::mt19937_64 rng(8);
    for (int i = 0; i < 19; ++i) {
        text.push_back({1.0 + testing::uniform(rng, -0.05, 0.05), testing::uniform(rng, -0.05, 0.05)});
        vision.push_back({0.0, 0.0});
    }
    text.push_back({-1.0, 3.0});
    vision.push_back({0.0, 0.0});
    const double r = 0.5;
    const auto idx = NeighborIndex::build(text, vision, r);
    SourceHistogram h;
    h.add("s", 20);

    auto oracle_density = [&](std::size_t i) {
        int c = 0;
        for (std::size_t j = 0; j < text.size(); ++j) {
            if (j == i) continue;
            const double d = std::hypot(text[i][0] - text[j][0], text[i][1] - text[j][1]);
            if (d <= r) ++c;
        }
        return c / 19.0;
    };
    for (std::size_t i = 0; i < 20; ++i) CHECK(idx.local_density(i) == Approx(oracle_density(i)));
    const double outlier = compute_coverage(19, "s", idx, h);
    for (std::size_t i = 0; i < 19; ++i) CHECK(outlier > compute_coverage(i, "s", idx, h));
}

TEST_CASE("coverage: unbuilt index or empty pool is an error", "[probe][coverage]") {
    NeighborIndex idx;
    SourceHistogram h;
    h.add("s");
    CHECK_THROWS_AS(compute_coverage(0, "s", idx, h), Error);
}

TEST_CASE("extract_all: identities hold and recompute from stored losses", "[probe][extract]") {
    const auto pool = mock_pool(50);
    const auto res = run_mock(pool);
    REQUIRE(res.failures.empty());
    // persist and reload the table, then recompute from the loss columns
    std::istringstream in(table_bytes(res));
    const auto table = read_descriptor_table(in);
    REQUIRE(table.rejected.empty());
    REQUIRE(table.rows.size() == 50);
    for (const auto& [id, d] : table.rows) {
        CHECK(d.m_vds == d.loss_blind - d.loss_video);
        CHECK(d.m_ppl == std::exp(d.loss_video));
        CHECK(d.m_sc >= 0.0);
        CHECK(d.m_sc <= 1.0);
    }
    for (const auto& r : res.pool) {
        if (r.is_video()) continue;
        CHECK(r.descriptors->m_flow == 0.0);
        CHECK(r.descriptors->m_tnc == 0.0);
        CHECK(r.descriptors->frame_diversity == 0.0);
    }
}

TEST_CASE("extract_all: deterministic across runs and worker counts", "[probe][extract]") {
    const auto pool = mock_pool(60);
    const auto a = table_bytes(run_mock(pool, 11, 1));
    CHECK(a == table_bytes(run_mock(pool, 11, 1)));
    CHECK(a == table_bytes(run_mock(pool, 11, 4)));
    CHECK(a != table_bytes(run_mock(pool, 12, 1)));
}

TEST_CASE("extract_all: one unreadable media reference is one recorded error", "[probe][extract]") {
    auto pool = mock_pool(40);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].is_video()) {
            pool[i].media = "missing/clip.frames.json";
            bad = i;
            break;
        }
    const auto res = run_mock(pool);
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].id == pool[bad].id);
    CHECK_FALSE(res.pool[bad].descriptors);
    std::size_t ok = 0;
    for (const auto& r : res.pool) ok += r.descriptors.has_value();
    CHECK(ok == 39);
    // error rows survive the table round trip
    std::istringstream in(table_bytes(res));
    const auto table = read_descriptor_table(in);
    REQUIRE(table.errors.size() == 1);
    CHECK(table.errors[0].id == pool[bad].id);
}

TEST_CASE("extract_all: failure fraction above the threshold aborts", "[probe][extract]") {
    auto pool = mock_pool(10);
    StubProbe p;
    p.fail = true;
    p.decodes = {"x"};
    ExtractionConfig cfg;
    CHECK_THROWS_AS(extract_all(pool, p, SyntheticFrameSource{}, BlockMatcher{}, cfg), ExtractionError);
    cfg.max_failure_fraction = 1.0;
    const auto res = extract_all(pool, p, SyntheticFrameSource{}, BlockMatcher{}, cfg);
    CHECK(res.failures.size() == 10);
}

TEST_CASE("extract_all: empty pool yields an empty table", "[probe][extract]") {
    const auto res = run_mock(Pool{});
    CHECK(res.pool.empty());
    CHECK(res.failures.empty());
    CHECK(table_bytes(res).empty());
}

TEST_CASE("frames fixtures load from disk", "[probe][extract]") {
    const fs::path p = fs::temp_directory_path() / "gdo_test_shift.frames.json";
    nlohmann::json j;
    j["width"] = 20;
    j["height"] = 20;
    for (int f = 0; f < 3; ++f) {
        const auto fr = textured_frame(20, 20, f, 0);
        j["frames"].push_back(fr.pixels);
    }
    std::ofstream(p) << j.dump();
    auto r = testing::make_record("v", Modality::video, 0.0);
    r.media = p.string();
    const auto frames = SyntheticFrameSource{}.frames(r);
    REQUIRE(frames.size() == 3);
    CHECK(compute_flow(frames, BlockMatcher{}) == Approx(1.0).margin(0.1));
}

TEST_CASE("descriptor table check names corrupted rows", "[probe][schema]") {
    const auto res = run_mock(mock_pool(6));
    auto bytes = table_bytes(res);
    // corrupt m_ppl on the third row
    std::istringstream lines(bytes);
    std::string line, out;
    int row = 0;
    while (std::getline(lines, line)) {
        if (++row == 3) {
            auto j = nlohmann::json::parse(line);
            j["m_ppl"] = j["m_ppl"].get<double>() * 1.01;
            line = j.dump();
        }
        out += line + "\n";
    }
    std::istringstream in(out);
    const auto t = read_descriptor_table(in);
    REQUIRE(t.rejected.size() == 1);
    CHECK(t.rejected[0].row == 3);
    CHECK(t.rejected[0].field == "m_ppl");
    CHECK(t.rows.size() == 5);

    std::istringstream empty("");
    const auto e = read_descriptor_table(empty);
    CHECK(e.rows.empty());
    CHECK(e.rejected.empty());
}

TEST_CASE("attach_descriptors joins by id and reports missing rows", "[probe][schema]") {
    auto pool = mock_pool(8);
    const auto res = run_mock(pool);
    DescriptorTable t;
    for (std::size_t i = 1; i < res.pool.size(); ++i) t.rows[res.pool[i].id] = *res.pool[i].descriptors;
    const auto missing = attach_descriptors(pool, t);
    REQUIRE(missing.size() == 1);
    CHECK(missing[0] == pool[0].id);
    CHECK(pool[1].descriptors == res.pool[1].descriptors);
    CHECK(pool[1].strata == res.pool[1].strata);
}
