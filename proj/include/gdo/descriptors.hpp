#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdo/coverage.hpp"
#include "gdo/error.hpp"
#include "gdo/flow.hpp"
#include "gdo/parallel.hpp"
#include "gdo/pool_io.hpp"
#include "gdo/probe.hpp"
#include "gdo/sample.hpp"
#include "gdo/strata.hpp"
#include "gdo/text.hpp"

namespace gdo {

struct VideoDependence {
    double loss_video = 0.0;
    double loss_blind = 0.0;
    double gap = 0.0;  // loss_blind - loss_video
};

namespace detail {
inline double checked_loss(const ProbeInterface& probe, const SampleRecord& s, Condition c) {
    const double l = probe.teacher_forced_loss(s, c);
    if (!std::isfinite(l) || l < 0)
        throw ProbeError("sample '" + s.id + "': probe returned invalid loss " + std::to_string(l));
    return l;
}
} // namespace detail

inline VideoDependence compute_vds(const SampleRecord& s, const ProbeInterface& probe) {
    VideoDependence v;
    v.loss_video = detail::checked_loss(probe, s, Condition::visual);
    v.loss_blind = detail::checked_loss(probe, s, Condition::blind);
    v.gap = v.loss_blind - v.loss_video;
    return v;
}

inline double compute_tnc(std::string_view question, const ProbeInterface& probe) {
    if (text::trim(question).empty()) throw ProbeError("temporal judgment: empty question");
    const double t = probe.temporal_judgment(question);
    if (std::isnan(t)) throw ProbeError("temporal judgment: probe returned NaN");
    return std::clamp(t, 0.0, 1.0);
}

/// Mean pairwise Jaccard similarity of the decodes' normalized token sets.
inline double mean_pairwise_jaccard(const std::vector<std::string>& decodes) {
    if (decodes.size() < 2) throw Error("self-consistency: need at least 2 decodes");
    std::vector<std::set<std::string>> sets;
    sets.reserve(decodes.size());
    for (const auto& d : decodes) sets.push_back(text::token_set(d));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            sum += text::jaccard(sets[i], sets[j]);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

inline double compute_self_consistency(const SampleRecord& s, const ProbeInterface& probe, int n,
                                       std::uint64_t seed) {
    if (n < 2) throw Error("self-consistency: n must be >= 2, got " + std::to_string(n));
    auto decodes = probe.sample_answers(s, n, seed);
    if (decodes.size() != static_cast<std::size_t>(n))
        throw ProbeError("sample '" + s.id + "': probe returned " + std::to_string(decodes.size()) + " decodes");
    return mean_pairwise_jaccard(decodes);
}

inline double compute_ppl(double loss_video) { return std::exp(loss_video); }

inline double compute_ppl(const SampleRecord& s, const ProbeInterface& probe) {
    return compute_ppl(detail::checked_loss(probe, s, Condition::visual));
}

struct ExtractionConfig {
    std::uint64_t seed = 0;
    int decodes = 5;
    unsigned workers = 1;
    double max_failure_fraction = 0.05;
    CoverageConfig coverage;
    StrataConfig strata;
};

struct ExtractionFailure {
    std::string id;
    std::string message;
};

struct ExtractionResult {
    Pool pool;  // every input record; failed ones have no descriptors
    std::vector<ExtractionFailure> failures;
};

class ExtractionError : public Error {
public:
    ExtractionError(const std::string& msg, std::vector<ExtractionFailure> failures)
        : Error(msg), failures_(std::move(failures)) {}
    const std::vector<ExtractionFailure>& failures() const noexcept { return failures_; }

private:
    std::vector<ExtractionFailure> failures_;
};

/// Per-sample descriptors (flow, loss gap, temporal judgment, self-consistency,
/// perplexity) followed by pool-level coverage. Image samples get zero flow,
/// zero temporal necessity and zero frame diversity. Results land in pool
/// order regardless of worker count.
inline ExtractionResult extract_all(const Pool& pool, const ProbeInterface& probe, const FrameSource& frames,
                                    const FlowEstimator& flow, const ExtractionConfig& cfg = {}) {
    ExtractionResult result;
    const std::size_t n = pool.size();
    std::vector<std::optional<DescriptorVector>> out(n);
    std::vector<std::string> errors(n);

    parallel_for(n, cfg.workers, [&](std::size_t i) {
        const SampleRecord& s = pool[i];
        try {
            DescriptorVector d;
            if (s.is_video()) {
                const auto fr = frames.frames(s);
                d.m_flow = compute_flow(fr, flow);
                d.frame_diversity = frame_diversity(fr);
                d.m_tnc = compute_tnc(s.question, probe);
            }
            const auto vds = compute_vds(s, probe);
            d.loss_video = vds.loss_video;
            d.loss_blind = vds.loss_blind;
            d.m_vds = vds.gap;
            d.m_ppl = compute_ppl(vds.loss_video);
            d.m_sc = compute_self_consistency(s, probe, cfg.decodes, cfg.seed);
            out[i] = d;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    if (n > 0) {
        const auto index = build_neighbor_index(pool, cfg.coverage, cfg.workers);
        const auto sources = SourceHistogram::of(pool);
        for (std::size_t i = 0; i < n; ++i)
            if (out[i]) out[i]->m_cov = compute_coverage(i, pool[i].source, index, sources, cfg.coverage);
    }

    std::vector<SampleRecord> records(pool.begin(), pool.end());
    for (std::size_t i = 0; i < n; ++i) {
        records[i].descriptors = out[i];
        records[i].quality_score.reset();
        records[i].rho.reset();
        records[i].strata = assign_strata(records[i], cfg.strata);
        if (!out[i]) result.failures.push_back({records[i].id, errors[i]});
    }
    result.pool = Pool(std::move(records));

    if (n > 0) {
        const double frac = static_cast<double>(result.failures.size()) / static_cast<double>(n);
        if (frac > cfg.max_failure_fraction)
            throw ExtractionError("descriptor extraction failed for " + std::to_string(result.failures.size()) +
                                      " of " + std::to_string(n) + " samples",
                                  result.failures);
    }
    return result;
}

/// Descriptor table: one JSON object per line, keyed by "id", carrying every
/// DescriptorVector field; a failed sample is {"id": ..., "error": ...}.
inline void write_descriptor_table(const Pool& pool, const std::vector<ExtractionFailure>& failures,
                                   std::ostream& out) {
    std::map<std::string, std::string> failed;
    for (const auto& f : failures) failed[f.id] = f.message;
    for (const auto& r : pool) {
        nlohmann::json j;
        if (r.descriptors) {
            j = descriptors_to_json(*r.descriptors);
            j["id"] = r.id;
        } else if (auto it = failed.find(r.id); it != failed.end()) {
            j = {{"id", r.id}, {"error", it->second}};
        } else {
            continue;
        }
        out << j.dump() << '\n';
    }
}

struct DescriptorTable {
    std::map<std::string, DescriptorVector> rows;
    std::vector<ExtractionFailure> errors;
    std::vector<Diagnostic> rejected;
};

/// Reads a descriptor table (ours or an external probe's). Rows failing the
/// range or identity checks are rejected with a diagnostic naming the row.
inline DescriptorTable read_descriptor_table(std::istream& in) {
    DescriptorTable t;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            t.rejected.push_back({row, "<row>", "invalid JSON object"});
            continue;
        }
        auto id = j.find("id");
        if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
            t.rejected.push_back({row, "id", "missing"});
            continue;
        }
        const std::string sid = id->get<std::string>();
        if (t.rows.count(sid)) {
            t.rejected.push_back({row, "id", "duplicate id '" + sid + "'"});
            continue;
        }
        if (auto e = j.find("error"); e != j.end() && !e->is_null()) {
            t.errors.push_back({sid, e->is_string() ? e->get<std::string>() : e->dump()});
            continue;
        }
        DescriptorVector d;
        bool ok = true;
        for (auto f : kDescriptorFields) {
            auto it = j.find(std::string(f));
            if (it == j.end() || !it->is_number()) {
                t.rejected.push_back({row, std::string(f), "missing or not a number"});
                ok = false;
                continue;
            }
            descriptor_field(d, f) = it->get<double>();
        }
        if (!ok) continue;
        auto bad = check_descriptors(d);
        if (!bad.empty()) {
            for (auto& [field, msg] : bad) t.rejected.push_back({row, field, msg + " (id '" + sid + "')"});
            continue;
        }
        t.rows.emplace(sid, d);
    }
    return t;
}

inline DescriptorTable read_descriptor_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PoolError("cannot open descriptor table '" + path.string() + "'");
    return read_descriptor_table(in);
}

/// Joins a descriptor table onto the pool by id and re-derives strata.
/// Returns the ids that have no usable row.
inline std::vector<std::string> attach_descriptors(Pool& pool, const DescriptorTable& table,
                                                   const StrataConfig& strata = {}) {
    std::vector<std::string> missing;
    for (auto& r : pool.mutable_records()) {
        auto it = table.rows.find(r.id);
        if (it == table.rows.end()) {
            r.descriptors.reset();
            missing.push_back(r.id);
        } else {
            r.descriptors = it->second;
        }
        r.strata = assign_strata(r, strata);
    }
    return missing;
}

} // namespace gdo
