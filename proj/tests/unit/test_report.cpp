#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "gdo/gdo.hpp"
#include "support/synthetic.hpp"

using namespace gdo;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Table1Row {
    const char* benchmark;
    double reference;
    std::int64_t crossing;
    double final_score;
    const char* reduction;
    const char* delta;
};

constexpr Table1Row kTable1[] = {
    {"MVBench", 62.27, 35400, 63.65, "14.5x", "+1.38"},
    {"VideoMME", 61.22, 26600, 62.89, "19.2x", "+1.67"},
    {"MLVU", 43.81, 27300, 46.89, "18.8x", "+3.08"},
    {"LVBench", 40.22, 34700, 41.06, "14.8x", "+0.84"},
};

/// Trajectory that first reaches `ref` exactly at `crossing` and ends at `final_score`.
Trajectory trajectory_for(double ref, std::int64_t crossing, double final_score) {
    return {{0, ref - 20.0}, {crossing / 2, ref - 3.0}, {crossing - 1000, ref - 0.01}, {crossing, ref},
            {crossing + 5000, ref - 0.5}, {kUniformBaselineBudget, final_score}};
}

const Pool& report_pool() {
    static const Pool p = testing::scored_synthetic_pool({.videos = 300, .images = 200, .seed = 51});
    return p;
}

GoalProfile report_profile() {
    GoalProfile p;
    p.budget = 120;
    p.video_ratio_min = 0.3;
    p.video_ratio = 0.5;
    p.video_ratio_max = 0.6;
    p.temporal_ratio_min = 0.2;
    p.vds_pos_target = 30;
    return p;
}

} // namespace

TEST_CASE("efficiency: reproduces the four reference rows", "[report][efficiency]") {
    for (const auto& row : kTable1) {
        INFO(row.benchmark);
        const auto r = peak_match(trajectory_for(row.reference, row.crossing, row.final_score), row.reference);
        REQUIRE(r.peak_match_samples);
        CHECK(*r.peak_match_samples == row.crossing);
        REQUIRE(r.reduction);
        CHECK(format_reduction(*r.reduction) == row.reduction);
        CHECK(format_delta(r.delta_pp) == row.delta);
        const auto line = render_efficiency(row.benchmark, r);
        CHECK(line.find(row.reduction) != std::string::npos);
        CHECK(line.find(row.delta) != std::string::npos);
    }
}

TEST_CASE("efficiency: never reaching the reference", "[report][efficiency]") {
    const Trajectory t{{1000, 10.0}, {2000, 20.0}};
    const auto r = peak_match(t, 50.0);
    CHECK_FALSE(r.peak_match_samples);
    CHECK_FALSE(r.reduction);
    CHECK(format_delta(r.delta_pp) == "-30.00");
    CHECK(render_efficiency("X", r).find("peak_match=none") != std::string::npos);
}

TEST_CASE("efficiency: crossing is monotone in the reference", "[report][efficiency]") {
    std::mt19937_64 rng(6);
    Trajectory t;
    double acc = 20.0;
    for (std::int64_t s = 1000; s <= 512000; s += 1000) {
        acc = std::min(100.0, acc + testing::uniform(rng, -0.2, 0.5));
        t.push_back({s, acc});
    }
    std::int64_t prev = 0;
    for (double ref = 20.0; ref <= 100.0; ref += 0.5) {
        const auto r = peak_match(t, ref);
        if (!r.peak_match_samples) {
            prev = std::numeric_limits<std::int64_t>::max();
            continue;
        }
        CHECK(*r.peak_match_samples >= prev);
        prev = *r.peak_match_samples;
    }
}

TEST_CASE("efficiency: input validation", "[report][efficiency]") {
    CHECK_THROWS_AS(peak_match({}, 50.0), Error);
    CHECK_THROWS_AS(peak_match({{1, 10}}, 101.0), Error);
    CHECK_THROWS_AS(peak_match({{1, 10}}, 10.0, 0), Error);
    CHECK_THROWS_AS(peak_match({{2, 10}, {2, 11}}, 10.0), Error);
    CHECK_THROWS_AS(peak_match({{1, 120}}, 10.0), Error);

    std::istringstream good("samples_seen,accuracy\n1000,40.5\n2000,41.25\n");
    const auto t = read_trajectory(good);
    REQUIRE(t.size() == 2);
    CHECK(t[1].samples_seen == 2000);
    CHECK(t[1].accuracy == 41.25);
    std::istringstream bad_header("step,acc\n1,2\n");
    CHECK_THROWS_AS(read_trajectory(bad_header), Error);
    std::istringstream bad_cell("samples_seen,accuracy\n1000,abc\n");
    CHECK_THROWS_AS(read_trajectory(bad_cell), Error);
}

TEST_CASE("rounding follows printed precision", "[report][efficiency]") {
    CHECK(round_half_up(14.45, 1) == Approx(14.5));
    CHECK(round_half_up(512000.0 / 35400.0, 1) == Approx(14.5));
    CHECK(format_delta(-0.001) == "+0.00");
    CHECK(format_delta(0.004) == "+0.00");
    CHECK(format_delta(-0.4) == "-0.40");
}

TEST_CASE("delta table", "[report][efficiency]") {
    const std::map<std::string, double> gdo_scores{{"MVBench", 63.65}, {"MLVU", 46.89}, {"Flat", 50.0}};
    const std::map<std::string, double> base{{"MVBench", 62.27}, {"MLVU", 43.81}, {"Flat", 50.0}};
    const auto rows = delta_table(gdo_scores, base);
    const auto csv = render_delta_table(rows);
    CHECK(csv.find("benchmark,gdo,baseline,delta_pp\n") == 0);
    CHECK(csv.find("MVBench,63.65,62.27,+1.38\n") != std::string::npos);
    CHECK(csv.find("MLVU,46.89,43.81,+3.08\n") != std::string::npos);
    CHECK(csv.find("Flat,50.00,50.00,+0.00\n") != std::string::npos);

    auto missing = base;
    missing.erase("MLVU");
    CHECK_THROWS_AS(delta_table(gdo_scores, missing), Error);
    auto extra = base;
    extra["LVBench"] = 40.22;
    CHECK_THROWS_AS(delta_table(gdo_scores, extra), Error);
}

TEST_CASE("composition report of a valid subset", "[report]") {
    const auto& pool = report_pool();
    const auto m = build_subset(pool, report_profile());
    const auto a = composition_report(m, pool);
    CHECK_FALSE(a.red_flags);
    CHECK(a.text.find("selected            120\n") != std::string::npos);
    CHECK(a.text.find("## red flags\nnone\n") != std::string::npos);
    // one row per entry plus header
    CHECK(std::count(a.score_rank_csv.begin(), a.score_rank_csv.end(), '\n') == 121);
    CHECK(a.stage_ratio_csv.find("stage,cumulative,video_ratio,temporal_ratio,vds_positive\n") == 0);
    // the last cumulative row covers the whole subset
    CHECK(a.stage_ratio_csv.find(",120,") != std::string::npos);

    const auto b = composition_report(m, pool);
    CHECK(a.text == b.text);
    CHECK(a.score_rank_csv == b.score_rank_csv);
    CHECK(a.stage_ratio_csv == b.stage_ratio_csv);
}

TEST_CASE("composition report raises red flags for a mutated subset", "[report]") {
    const auto& pool = report_pool();
    auto m = build_subset(pool, report_profile());
    std::set<std::string> chosen;
    for (const auto& e : m.entries) chosen.insert(e.id);
    // swap every video for an unselected image
    std::size_t next = 0;
    for (auto& e : m.entries) {
        if (!pool[*pool.find(e.id)].is_video()) continue;
        while (pool[next].is_video() || chosen.count(pool[next].id)) ++next;
        e.id = pool[next++].id;
    }
    const auto r = composition_report(m, pool);
    CHECK(r.red_flags);
    CHECK(r.text.find("FAIL video_ratio") != std::string::npos);
}

TEST_CASE("composition report of an empty manifest", "[report]") {
    SubsetManifest m;
    const auto r = composition_report(m, report_pool());
    CHECK(r.text.find("selected            0\n") != std::string::npos);
    CHECK(r.text.find("video_ratio         0.0000") != std::string::npos);
    CHECK(r.score_rank_csv == "rank,id,modality,stage,rho\n");
    CHECK_FALSE(r.red_flags);
}

TEST_CASE("manifests round-trip through their file format", "[report][manifest]") {
    const auto& pool = report_pool();
    auto m = build_subset(pool, report_profile(), {.stats_id = "abc123"});
    m.ablation = "vds";
    const auto bytes = testing::manifest_bytes(m);
    std::istringstream in(bytes);
    const auto back = read_manifest(in);
    CHECK(back.entries == m.entries);
    CHECK(back.stats_id == "abc123");
    CHECK(back.ablation == "vds");
    CHECK(testing::manifest_bytes(back) == bytes);

    std::istringstream no_summary("{\"id\":\"a\",\"stage\":\"score_tail\"}\n");
    CHECK_THROWS_AS(read_manifest(no_summary), Error);
    std::istringstream bad_stage("{\"id\":\"a\",\"stage\":\"magic\"}\n");
    CHECK_THROWS_AS(read_manifest(bad_stage), Error);
}

TEST_CASE("shipped profile files equal the presets", "[report][profile]") {
    const fs::path dir = GDO_SOURCE_DIR "/profiles";
    for (auto n : {ProfileName::MinLoss, ProfileName::Diverse, ProfileName::Temp, ProfileName::TempPlus}) {
        const auto p = load_profile(dir / (preset_file_stem(n) + ".json"));
        CHECK(p == preset(n));
    }
    const auto tp = load_profile(dir / "temp_plus.json");
    CHECK(tp.budget == 53300);
    CHECK(tp.video_ratio == 0.59);
    CHECK(tp.vds_pos_target == 9000);
    CHECK(tp.video_ratio_min == 0.50);
    CHECK(tp.video_ratio_max == 0.64);
    CHECK(tp.temporal_ratio_min == 0.38);
}

TEST_CASE("profile validation", "[report][profile]") {
    auto j = profile_to_json(preset(ProfileName::Temp));
    CHECK(profile_from_json(j) == preset(ProfileName::Temp));
    j["r_v_min"] = 0.9;
    CHECK_THROWS_AS(profile_from_json(j), ConfigError);
    j = profile_to_json(preset(ProfileName::Temp));
    j["name"] = "Warp";
    CHECK_THROWS_AS(profile_from_json(j), ConfigError);
    j = profile_to_json(preset(ProfileName::Temp));
    j.erase("N_g");
    CHECK_THROWS_AS(profile_from_json(j), ConfigError);
    CHECK(parse_profile_name("Temp+") == ProfileName::TempPlus);
    CHECK(parse_profile_name("min_loss") == ProfileName::MinLoss);
}
