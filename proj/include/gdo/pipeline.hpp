#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "gdo/descriptors.hpp"
#include "gdo/flow.hpp"
#include "gdo/normalize.hpp"
#include "gdo/probe.hpp"
#include "gdo/sample.hpp"
#include "gdo/scorer.hpp"

namespace gdo {

struct PipelineConfig {
    ExtractionConfig extraction;
    MockProbeConfig probe;
    // Small frames and a narrow window keep the mock pass cheap on large pools.
    SyntheticFrameConfig frames{.width = 12, .height = 12, .max_frames = 3, .max_shift = 2, .seed = 0, .media_root = {}};
    BlockMatchConfig flow{.block_radius = 2, .search_radius = 3};
    Ablation ablation;
    MergeConfig merge;
    AlignmentTarget alignment = AlignmentTarget::pool_marginal;
};

struct PreparedPool {
    Pool pool;  // only records with descriptors
    std::vector<ExtractionFailure> failures;
};

/// Records without descriptors are dropped; the rest keep pool order.
inline Pool drop_undescribed(const Pool& pool) {
    std::vector<SampleRecord> kept;
    kept.reserve(pool.size());
    for (const auto& r : pool)
        if (r.descriptors) kept.push_back(r);
    return Pool(std::move(kept));
}

inline bool fully_described(const Pool& pool) {
    return std::all_of(pool.begin(), pool.end(), [](const SampleRecord& r) { return r.descriptors.has_value(); });
}

inline PreparedPool prepare_pool(const Pool& pool, const ProbeInterface& probe, const FrameSource& frames,
                                 const FlowEstimator& flow, const ExtractionConfig& cfg) {
    auto res = extract_all(pool, probe, frames, flow, cfg);
    return {drop_undescribed(res.pool), std::move(res.failures)};
}

/// Extraction with the mock probe, unless every record already carries
/// descriptors (e.g. from an external descriptor table).
inline PreparedPool prepare_pool(const Pool& pool, const PipelineConfig& cfg) {
    if (fully_described(pool)) {
        Pool copy = pool;
        assign_strata(copy, cfg.extraction.strata);
        return {std::move(copy), {}};
    }
    MockProbeConfig pc = cfg.probe;
    pc.seed = cfg.extraction.seed;
    SyntheticFrameConfig fc = cfg.frames;
    fc.seed = cfg.extraction.seed;
    return prepare_pool(pool, MockProbe(pc), SyntheticFrameSource(fc), BlockMatcher(cfg.flow), cfg.extraction);
}

inline ScoredPool score_prepared(const Pool& prepared, const PipelineConfig& cfg) {
    const auto ctx = ScoringContext::build(prepared, cfg.ablation, cfg.merge, cfg.alignment);
    return score_pool(prepared, ctx, cfg.extraction.workers);
}

} // namespace gdo
