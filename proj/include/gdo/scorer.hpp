#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gdo/coverage.hpp"
#include "gdo/error.hpp"
#include "gdo/normalize.hpp"
#include "gdo/parallel.hpp"
#include "gdo/sample.hpp"
#include "gdo/strata.hpp"
#include "gdo/text.hpp"

namespace gdo {

/// Fixed mixture weights of the shared score. Shared by every goal profile.
namespace weights {
// video base term
inline constexpr double kVidText = 1.0;
inline constexpr double kVidDifficulty = 0.85;
inline constexpr double kVidAlignment = 0.90;
inline constexpr double kVidTemporal = 0.55;
inline constexpr double kVidRarity = 0.15;
// video score
inline constexpr double kVidTanh = 0.35;
inline constexpr double kVidVds3 = 0.95;
inline constexpr double kVidQuality = 0.35;
// image base term
inline constexpr double kImgText = 1.10;
inline constexpr double kImgDifficulty = 0.85;
inline constexpr double kImgAlignment = 0.90;
inline constexpr double kImgRarity = 0.15;
// image score
inline constexpr double kImgTanh = 0.90;
inline constexpr double kImgQuality = 0.15;

inline constexpr double kTanhScale = 3.0;
} // namespace weights

struct BaseComponents {
    double q_text = 0.0;
    double d = 0.0;
    double a = 0.0;
    double t = 0.0;
    double r_src = 0.0;
};

constexpr double base_term_video(const BaseComponents& c) noexcept {
    return weights::kVidText * c.q_text + weights::kVidDifficulty * c.d + weights::kVidAlignment * c.a +
           weights::kVidTemporal * c.t + weights::kVidRarity * c.r_src;
}

/// No temporal bonus; t is ignored.
constexpr double base_term_image(const BaseComponents& c) noexcept {
    return weights::kImgText * c.q_text + weights::kImgDifficulty * c.d + weights::kImgAlignment * c.a +
           weights::kImgRarity * c.r_src;
}

inline double score_video(double base, double z_vds3, double z_qual) {
    return weights::kVidTanh * std::tanh(base / weights::kTanhScale) + weights::kVidVds3 * z_vds3 +
           weights::kVidQuality * z_qual;
}

inline double score_image(double base, double z_qual) {
    return weights::kImgTanh * std::tanh(base / weights::kTanhScale) + weights::kImgQuality * z_qual;
}

struct ScoreBreakdown {
    double q_text = 0.0;
    double d = 0.0;
    double a = 0.0;
    double t = 0.0;
    double r_src = 0.0;
    double b = 0.0;
    double z_vds3 = 0.0;
    double z_qual = 0.0;
    // weighted contributions; rho is their sum
    double base_part = 0.0;
    double vds3_part = 0.0;
    double quality_part = 0.0;
    double rho = 0.0;
};

struct Ablation {
    bool vds = false;
    bool ppl = false;
    bool sc = false;

    bool none() const noexcept { return !vds && !ppl && !sc; }

    /// Comma-separated subset of {vds, ppl, sc}; empty means no ablation.
    static Ablation parse(std::string_view list) {
        Ablation a;
        for (const auto& w : text::alnum_words(list)) {
            if (w == "vds")
                a.vds = true;
            else if (w == "ppl")
                a.ppl = true;
            else if (w == "sc")
                a.sc = true;
            else
                throw ConfigError("unknown ablation term '" + w + "' (expected vds, ppl, sc)");
        }
        return a;
    }

    std::string to_string() const {
        std::string s;
        for (auto [on, name] : {std::pair{vds, "vds"}, std::pair{ppl, "ppl"}, std::pair{sc, "sc"}})
            if (on) s += (s.empty() ? "" : ",") + std::string(name);
        return s;
    }

    MergeConfig merge_config(MergeConfig base = {}) const {
        base.use_sc = !sc;
        base.use_ppl = !ppl;
        return base;
    }
};

/// Heuristic text prior in [0, 2]: answer-length adequacy (up to 0.8),
/// an interrogative question (0.6) and no boilerplate phrases (0.6).
inline double text_quality_prior(const SampleRecord& r) {
    static constexpr std::array<std::string_view, 9> kBoilerplate{
        "as an ai", "i cannot", "i cant", "sorry", "lorem ipsum", "i dont know", "not sure", "cannot be determined",
        "no answer"};
    static constexpr std::array<std::string_view, 9> kInterrogatives{"what", "where", "who",  "which", "whose",
                                                                     "whom", "when",  "why", "how"};
    double q = 0.0;
    const auto alen = text::token_count(r.answer);
    if (alen == 1 || (alen > 48 && alen <= 128))
        q += 0.4;
    else if (alen >= 2 && alen <= 48)
        q += 0.8;

    const auto qtok = text::tokens(r.question);
    bool interrogative = text::trim(r.question).ends_with('?');
    for (auto w : kInterrogatives) interrogative = interrogative || text::contains_word(qtok, w);
    if (interrogative) q += 0.6;

    const std::string padded = " " + text::normalize(r.question) + " " + text::normalize(r.answer) + " ";
    bool clean = true;
    for (auto p : kBoilerplate)
        if (padded.find(" " + std::string(p) + " ") != std::string::npos) clean = false;
    if (clean) q += 0.6;
    return q;
}

/// Triangular preference for medium difficulty: 1 at z = 0, 0 for |z| >= 2.
inline double difficulty_preference(double z_loss) { return std::max(0.0, 1.0 - std::abs(z_loss) / 2.0); }

inline constexpr std::size_t kStratumDims = 6;

inline std::array<int, kStratumDims> stratum_bins(const StratumKey& k) {
    return {static_cast<int>(k.duration_bucket), static_cast<int>(k.temporal_bucket),
            static_cast<int>(k.question_form),   static_cast<int>(k.qlen_bucket),
            static_cast<int>(k.alen_bucket),     static_cast<int>(k.source_type)};
}

/// Per-dimension bin shares over the six stratum dimensions.
struct StratumMarginals {
    std::array<std::map<int, double>, kStratumDims> shares;

    static StratumMarginals of(const Pool& pool) {
        StratumMarginals m;
        if (pool.empty()) return m;
        std::array<std::map<int, std::size_t>, kStratumDims> counts;
        for (const auto& r : pool) {
            const auto bins = stratum_bins(r.strata);
            for (std::size_t k = 0; k < kStratumDims; ++k) ++counts[k][bins[k]];
        }
        for (std::size_t k = 0; k < kStratumDims; ++k)
            for (const auto& [bin, c] : counts[k])
                m.shares[k][bin] = static_cast<double>(c) / static_cast<double>(pool.size());
        return m;
    }

    /// Equal share for every bin observed in `observed`.
    static StratumMarginals balanced(const StratumMarginals& observed) {
        StratumMarginals m;
        for (std::size_t k = 0; k < kStratumDims; ++k)
            for (const auto& [bin, share] : observed.shares[k])
                m.shares[k][bin] = 1.0 / static_cast<double>(observed.shares[k].size());
        return m;
    }

    double share(std::size_t dim, int bin) const {
        auto it = shares[dim].find(bin);
        return it == shares[dim].end() ? 0.0 : it->second;
    }
};

enum class AlignmentTarget { pool_marginal, balanced };

/// Bin alignment in [0, 1]: one minus the mean, over the six dimensions, of
/// how far the record's bin is over-represented in the pool relative to the
/// target share. Constant 1 when the target is the pool marginal itself.
inline double bin_alignment(const StratumKey& key, const StratumMarginals& pool, const StratumMarginals& target) {
    const auto bins = stratum_bins(key);
    double dev = 0.0;
    for (std::size_t k = 0; k < kStratumDims; ++k) {
        const double p = pool.share(k, bins[k]);
        if (p <= 0.0) continue;
        dev += std::max(0.0, p - target.share(k, bins[k])) / p;
    }
    return 1.0 - dev / static_cast<double>(kStratumDims);
}

/// Everything frozen before scoring: normalization stats, source shares and
/// stratum marginals/targets.
struct ScoringContext {
    NormalizationStats stats;
    SourceHistogram sources;
    StratumMarginals pool_marginals;
    StratumMarginals targets;
    Ablation ablation;

    static ScoringContext build(const Pool& pool, const Ablation& ablation = {}, MergeConfig merge = {},
                                AlignmentTarget target = AlignmentTarget::pool_marginal) {
        ScoringContext c;
        c.ablation = ablation;
        c.stats = NormalizationStats::compute(pool, ablation.merge_config(merge));
        c.sources = SourceHistogram::of(pool);
        c.pool_marginals = StratumMarginals::of(pool);
        c.targets = target == AlignmentTarget::balanced ? StratumMarginals::balanced(c.pool_marginals)
                                                        : c.pool_marginals;
        return c;
    }

    /// Same as build() but with previously persisted stats.
    static ScoringContext replay(const Pool& pool, NormalizationStats stats, const Ablation& ablation,
                                 AlignmentTarget target = AlignmentTarget::pool_marginal) {
        ScoringContext c = build(pool, ablation, stats.config, target);
        c.stats = std::move(stats);
        return c;
    }
};

inline BaseComponents base_components(const SampleRecord& r, const ScoringContext& ctx) {
    if (!r.descriptors) throw Error("sample '" + r.id + "' has no descriptors");
    BaseComponents c;
    c.q_text = text_quality_prior(r);
    c.d = ctx.ablation.ppl ? 0.0 : difficulty_preference(ctx.stats.z("loss_video", r.descriptors->loss_video));
    c.a = bin_alignment(r.strata, ctx.pool_marginals, ctx.targets);
    c.t = r.is_video() ? r.descriptors->m_tnc : 0.0;
    c.r_src = ctx.sources.rarity(r.source);
    return c;
}

inline double base_term_video(const SampleRecord& r, const ScoringContext& ctx) {
    return base_term_video(base_components(r, ctx));
}

inline double base_term_image(const SampleRecord& r, const ScoringContext& ctx) {
    return base_term_image(base_components(r, ctx));
}

inline ScoreBreakdown score_record(const SampleRecord& r, const ScoringContext& ctx) {
    const BaseComponents c = base_components(r, ctx);
    ScoreBreakdown s;
    s.q_text = c.q_text;
    s.d = c.d;
    s.a = c.a;
    s.t = c.t;
    s.r_src = c.r_src;
    s.z_qual = z_quality(r, ctx.stats);
    if (r.is_video()) {
        s.b = base_term_video(c);
        s.z_vds3 = ctx.ablation.vds ? 0.0 : compute_zvds3(r, ctx.stats);
        s.base_part = weights::kVidTanh * std::tanh(s.b / weights::kTanhScale);
        s.vds3_part = weights::kVidVds3 * s.z_vds3;
        s.quality_part = weights::kVidQuality * s.z_qual;
        s.rho = score_video(s.b, s.z_vds3, s.z_qual);
    } else {
        s.t = 0.0;
        s.b = base_term_image(c);
        s.base_part = weights::kImgTanh * std::tanh(s.b / weights::kTanhScale);
        s.quality_part = weights::kImgQuality * s.z_qual;
        s.rho = score_image(s.b, s.z_qual);
    }
    return s;
}

struct ScoredPool {
    Pool pool;  // rho and quality_score filled
    std::vector<ScoreBreakdown> breakdowns;
    ScoringContext context;
};

/// Scores every record. All records need descriptors.
inline ScoredPool score_pool(const Pool& pool, const ScoringContext& ctx, unsigned workers = 1) {
    for (const auto& r : pool)
        if (!r.descriptors) throw Error("score_pool: sample '" + r.id + "' has no descriptors");
    ScoredPool out{pool, std::vector<ScoreBreakdown>(pool.size()), ctx};
    parallel_for(pool.size(), workers, [&](std::size_t i) { out.breakdowns[i] = score_record(pool[i], ctx); });
    for (std::size_t i = 0; i < pool.size(); ++i) {
        out.pool[i].rho = out.breakdowns[i].rho;
        out.pool[i].quality_score = merge_quality(pool[i], ctx.stats);
    }
    return out;
}

inline ScoredPool score_pool(const Pool& pool, const Ablation& ablation = {}, unsigned workers = 1,
                             AlignmentTarget target = AlignmentTarget::pool_marginal) {
    return score_pool(pool, ScoringContext::build(pool, ablation, {}, target), workers);
}

} // namespace gdo
