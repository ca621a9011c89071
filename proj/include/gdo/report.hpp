#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gdo/manifest.hpp"
#include "gdo/profile.hpp"
#include "gdo/sample.hpp"
#include "gdo/verify.hpp"

namespace gdo {

struct CompositionReport {
    std::string text;
    std::string score_rank_csv;   // rank,id,modality,stage,rho
    std::string stage_ratio_csv;  // stage,cumulative,video_ratio,temporal_ratio,vds_positive
    bool red_flags = false;
};

namespace detail {

inline std::string fixed(double v, int prec = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace detail

/// Pure function of (manifest, pool). Constraint checks use the manifest's
/// profile snapshot when it has one.
inline CompositionReport composition_report(const SubsetManifest& m, const Pool& pool, const VerifyConfig& cfg = {}) {
    const auto idx = resolve_manifest(m, pool);
    CompositionReport out;

    std::int64_t videos = 0, temporal = 0, vds = 0;
    std::map<std::string, std::int64_t> sources, stages;
    std::vector<double> rhos;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& r = pool[idx[k]];
        if (r.is_video()) {
            ++videos;
            if (r.descriptors && r.descriptors->m_tnc >= cfg.temporal_threshold) ++temporal;
        }
        if (r.descriptors && r.descriptors->m_vds > 0.0) ++vds;
        ++sources[r.source];
        ++stages[std::string(to_string(m.entries[k].stage))];
        if (r.rho) rhos.push_back(*r.rho);
    }
    const auto n = static_cast<std::int64_t>(idx.size());
    const double vr = n ? static_cast<double>(videos) / static_cast<double>(n) : 0.0;
    const double tr = videos ? static_cast<double>(temporal) / static_cast<double>(videos) : 0.0;

    std::ostringstream os;
    os << "# composition: " << m.kind << "\n";
    os << "selected            " << n << "\n";
    os << "video_ratio         " << detail::fixed(vr) << "  (" << videos << " videos, " << (n - videos) << " images)\n";
    os << "temporal_ratio      " << detail::fixed(tr) << "  (" << temporal << " temporal-positive)\n";
    os << "vds_positive        " << vds << "\n";
    os << "\n## sources\n";
    for (const auto& [s, c] : sources) os << s << "  " << c << "\n";
    os << "\n## stages\n";
    for (Stage st : kAllStages) {
        auto it = stages.find(std::string(to_string(st)));
        if (it != stages.end()) os << it->first << "  " << it->second << "\n";
    }

    std::vector<double> sorted = rhos;
    std::sort(sorted.begin(), sorted.end());
    os << "\n## score\n";
    double mean = 0.0;
    for (double v : sorted) mean += v;
    if (!sorted.empty()) mean /= static_cast<double>(sorted.size());
    os << "scored " << sorted.size() << "  min " << detail::fixed(sorted.empty() ? 0.0 : sorted.front())
       << "  p25 " << detail::fixed(detail::quantile_sorted(sorted, 0.25)) << "  median "
       << detail::fixed(detail::quantile_sorted(sorted, 0.5)) << "  p75 "
       << detail::fixed(detail::quantile_sorted(sorted, 0.75)) << "  max "
       << detail::fixed(sorted.empty() ? 0.0 : sorted.back()) << "  mean " << detail::fixed(mean) << "\n";

    os << "\n## red flags\n";
    if (m.profile.is_object() && m.profile.contains("N_g") && m.kind != "uniform_control") {
        const auto rep = verify_manifest(m, pool, profile_from_json(m.profile), cfg);
        bool any = false;
        for (const auto& c : rep.checks)
            if (c.status != CheckStatus::pass) {
                os << to_string(c.status) << ' ' << c.name << ": achieved " << c.achieved << ", required "
                   << c.required << "\n";
                any = true;
            }
        if (!any) os << "none\n";
        out.red_flags = !rep.ok();
    } else {
        os << "none (no profile snapshot)\n";
    }
    out.text = os.str();

    // Plot data.
    std::vector<std::size_t> order(idx.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = pool[idx[a]];
        const auto& rb = pool[idx[b]];
        const double xa = ra.rho.value_or(0.0), xb = rb.rho.value_or(0.0);
        if (xa != xb) return xa > xb;
        return ra.id < rb.id;
    });
    std::ostringstream sr;
    sr << "rank,id,modality,stage,rho\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& r = pool[idx[order[k]]];
        sr << (k + 1) << ',' << r.id << ',' << to_string(r.modality) << ',' << to_string(m.entries[order[k]].stage)
           << ',' << (r.rho ? detail::fixed(*r.rho, 6) : std::string()) << '\n';
    }
    out.score_rank_csv = sr.str();

    std::ostringstream st;
    st << "stage,cumulative,video_ratio,temporal_ratio,vds_positive\n";
    std::int64_t cum = 0, cv = 0, ct = 0, cd = 0;
    for (Stage s : kAllStages) {
        bool any = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (m.entries[k].stage != s) continue;
            any = true;
            const auto& r = pool[idx[k]];
            ++cum;
            if (r.is_video()) {
                ++cv;
                if (r.descriptors && r.descriptors->m_tnc >= cfg.temporal_threshold) ++ct;
            }
            if (r.descriptors && r.descriptors->m_vds > 0.0) ++cd;
        }
        if (!any) continue;
        st << to_string(s) << ',' << cum << ',' << detail::fixed(static_cast<double>(cv) / static_cast<double>(cum), 6)
           << ',' << detail::fixed(cv ? static_cast<double>(ct) / static_cast<double>(cv) : 0.0, 6) << ',' << cd
           << '\n';
    }
    out.stage_ratio_csv = st.str();
    return out;
}

} // namespace gdo
