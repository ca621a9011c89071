#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdo/error.hpp"
#include "gdo/hash.hpp"
#include "gdo/sample.hpp"

namespace gdo {

inline constexpr double kDefaultClip = 4.0;
inline constexpr double kDefaultFrameDiversityWeight = 0.25;

struct ColumnStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t count = 0;

    bool operator==(const ColumnStats&) const = default;
};

inline ColumnStats column_stats(std::span<const double> v) {
    ColumnStats s;
    s.count = v.size();
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
}

/// (v - mean) / std clipped to [-clip, clip]; 0 when std is 0.
inline double zscore(double v, const ColumnStats& s, double clip = kDefaultClip) {
    if (!(s.stddev > 0.0)) return 0.0;
    return std::clamp((v - s.mean) / s.stddev, -clip, clip);
}

inline std::vector<double> znormalize(std::span<const double> column, double clip = kDefaultClip,
                                      std::optional<ColumnStats> stats = std::nullopt) {
    if (column.empty()) throw Error("znormalize: empty column");
    const ColumnStats s = stats ? *stats : column_stats(column);
    std::vector<double> out;
    out.reserve(column.size());
    for (double v : column) out.push_back(zscore(v, s, clip));
    return out;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

struct MergeConfig {
    double clip = kDefaultClip;
    double frame_diversity_weight = kDefaultFrameDiversityWeight;  // lambda_f
    bool use_sc = true;   // false under the SC ablation
    bool use_ppl = true;  // false under the PPL ablation
};

/// Frozen per-column statistics. Quality-side columns are pool-global;
/// frame_diversity and vds3_raw are over video records only.
struct NormalizationStats {
    MergeConfig config;
    double ppl_median = 0.0;
    std::map<std::string, ColumnStats> columns;

    const ColumnStats& column(const std::string& name) const {
        auto it = columns.find(name);
        if (it == columns.end()) throw Error("normalization stats: no column '" + name + "'");
        return it->second;
    }

    double z(const std::string& name, double v) const { return zscore(v, column(name), config.clip); }

    static NormalizationStats compute(const Pool& pool, const MergeConfig& cfg = {});

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["clip"] = config.clip;
        j["frame_diversity_weight"] = config.frame_diversity_weight;
        j["use_sc"] = config.use_sc;
        j["use_ppl"] = config.use_ppl;
        j["ppl_median"] = ppl_median;
        nlohmann::json cols = nlohmann::json::object();
        for (const auto& [k, s] : columns) cols[k] = {{"mean", s.mean}, {"stddev", s.stddev}, {"count", s.count}};
        j["columns"] = cols;
        return j;
    }

    static NormalizationStats from_json(const nlohmann::json& j) {
        NormalizationStats s;
        try {
            s.config.clip = j.at("clip").get<double>();
            s.config.frame_diversity_weight = j.at("frame_diversity_weight").get<double>();
            s.config.use_sc = j.at("use_sc").get<bool>();
            s.config.use_ppl = j.at("use_ppl").get<bool>();
            s.ppl_median = j.at("ppl_median").get<double>();
            for (const auto& [k, v] : j.at("columns").items())
                s.columns[k] = {v.at("mean").get<double>(), v.at("stddev").get<double>(),
                                v.at("count").get<std::size_t>()};
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("normalization stats: ") + e.what());
        }
        return s;
    }

    /// Short content hash used to tie manifests to the stats they were scored with.
    std::string id() const { return hex64(fnv1a64(to_json().dump())); }
};

namespace detail {
inline const DescriptorVector& need_descriptors(const SampleRecord& r) {
    if (!r.descriptors) throw Error("sample '" + r.id + "' has no descriptors");
    return *r.descriptors;
}

/// Centered difficulty: closeness of perplexity to the pool median.
inline double ppl_centered(const DescriptorVector& d, double ppl_median) { return -std::abs(d.m_ppl - ppl_median); }

inline double merged_quality(const DescriptorVector& d, double ppl_median,
                             const std::map<std::string, ColumnStats>& cols, const MergeConfig& cfg) {
    double sum = 0.0;
    int terms = 0;
    if (cfg.use_sc) {
        sum += zscore(d.m_sc, cols.at("m_sc"), cfg.clip);
        ++terms;
    }
    if (cfg.use_ppl) {
        sum += zscore(ppl_centered(d, ppl_median), cols.at("ppl_centered"), cfg.clip);
        ++terms;
    }
    sum += zscore(d.m_cov, cols.at("m_cov"), cfg.clip);
    ++terms;
    return sum / terms;
}

inline double vds3_raw(const DescriptorVector& d, const std::map<std::string, ColumnStats>& cols,
                       const MergeConfig& cfg) {
    const double zdiv = std::max(0.0, zscore(d.frame_diversity, cols.at("frame_diversity"), cfg.clip));
    return (d.loss_blind - d.loss_video) * (1.0 + cfg.frame_diversity_weight * zdiv);
}
} // namespace detail

inline NormalizationStats NormalizationStats::compute(const Pool& pool, const MergeConfig& cfg) {
    NormalizationStats s;
    s.config = cfg;
    std::vector<double> sc, pplv, cov, loss, div;
    for (const auto& r : pool) {
        if (!r.descriptors) continue;
        const auto& d = *r.descriptors;
        sc.push_back(d.m_sc);
        pplv.push_back(d.m_ppl);
        cov.push_back(d.m_cov);
        loss.push_back(d.loss_video);
        if (r.is_video()) div.push_back(d.frame_diversity);
    }
    s.ppl_median = median(pplv);
    std::vector<double> centered;
    centered.reserve(pplv.size());
    for (double p : pplv) centered.push_back(-std::abs(p - s.ppl_median));
    s.columns["m_sc"] = column_stats(sc);
    s.columns["ppl_centered"] = column_stats(centered);
    s.columns["m_cov"] = column_stats(cov);
    s.columns["loss_video"] = column_stats(loss);
    s.columns["frame_diversity"] = column_stats(div);

    std::vector<double> quality, raw;
    for (const auto& r : pool) {
        if (!r.descriptors) continue;
        quality.push_back(detail::merged_quality(*r.descriptors, s.ppl_median, s.columns, cfg));
        if (r.is_video()) raw.push_back(detail::vds3_raw(*r.descriptors, s.columns, cfg));
    }
    s.columns["quality_score"] = column_stats(quality);
    s.columns["vds3_raw"] = column_stats(raw);
    return s;
}

/// Unweighted mean of z(m_sc), z(-|m_ppl - median|) and z(m_cov), dropping
/// the terms switched off in the stats' config.
inline double merge_quality(const SampleRecord& r, const NormalizationStats& s) {
    return detail::merged_quality(detail::need_descriptors(r), s.ppl_median, s.columns, s.config);
}

inline double z_quality(const SampleRecord& r, const NormalizationStats& s) {
    return s.z("quality_score", merge_quality(r, s));
}

/// Loss gap scaled up by above-average frame diversity, before normalization.
inline double zvds3_raw(const SampleRecord& r, const NormalizationStats& s) {
    return detail::vds3_raw(detail::need_descriptors(r), s.columns, s.config);
}

/// Normalized video-dependence term; 0 for images.
inline double compute_zvds3(const SampleRecord& r, const NormalizationStats& s) {
    if (!r.is_video()) {
        detail::need_descriptors(r);
        return 0.0;
    }
    return s.z("vds3_raw", zvds3_raw(r, s));
}

/// Fills quality_score on every record that has descriptors.
inline void apply_quality(Pool& pool, const NormalizationStats& s) {
    for (auto& r : pool.mutable_records())
        if (r.descriptors) r.quality_score = merge_quality(r, s);
}

} // namespace gdo
