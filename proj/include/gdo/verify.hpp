#pragma once

// Independent manifest checker. Recomputes every constraint from the raw pool
// and the id list; deliberately does not call into builder.hpp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdo/dedup.hpp"
#include "gdo/error.hpp"
#include "gdo/manifest.hpp"
#include "gdo/profile.hpp"
#include "gdo/sample.hpp"
#include "gdo/text.hpp"

namespace gdo {

enum class CheckStatus { pass, warn, fail };

inline std::string_view to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::warn: return "WARN";
    case CheckStatus::fail: return "FAIL";
    }
    return "?";
}

struct Check {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    std::string achieved;
    std::string required;
};

struct VerifyReport {
    std::vector<Check> checks;

    bool ok() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail) return false;
        return true;
    }
    const Check* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::vector<const Check*> failures() const {
        std::vector<const Check*> out;
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail) out.push_back(&c);
        return out;
    }
    std::string render() const {
        std::ostringstream os;
        for (const auto& c : checks)
            os << to_string(c.status) << "  " << c.name << "  achieved=" << c.achieved << "  required=" << c.required
               << '\n';
        return os.str();
    }
};

struct VerifyConfig {
    double temporal_threshold = 0.5;
    double tolerance = 1e-9;
};

namespace detail {

inline std::string fmt_ratio(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace detail

/// Resolves manifest ids against the pool; throws on a dangling id.
inline std::vector<std::size_t> resolve_manifest(const SubsetManifest& m, const Pool& pool) {
    std::vector<std::size_t> idx;
    idx.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        auto i = pool.find(e.id);
        if (!i) throw Error("manifest references unknown id '" + e.id + "'");
        idx.push_back(*i);
    }
    return idx;
}

inline VerifyReport verify_manifest(const SubsetManifest& m, const Pool& pool, const GoalProfile& profile,
                                    const VerifyConfig& cfg = {}) {
    const auto idx = resolve_manifest(m, pool);
    VerifyReport rep;
    auto add = [&](std::string name, bool ok, std::string achieved, std::string required, bool soft = false) {
        rep.checks.push_back({std::move(name), ok ? CheckStatus::pass : (soft ? CheckStatus::warn : CheckStatus::fail),
                              std::move(achieved), std::move(required)});
    };

    std::set<std::string> seen;
    std::int64_t repeated = 0;
    for (const auto& e : m.entries)
        if (!seen.insert(e.id).second) ++repeated;
    add("unique_ids", repeated == 0, std::to_string(repeated) + " repeated", "0 repeated");

    std::int64_t videos = 0, images = 0, temporal = 0, vds = 0;
    std::map<std::string, std::int64_t> per_clip, per_source;
    std::set<std::pair<std::string, std::string>> keys;
    std::int64_t dup_keys = 0;
    for (std::size_t i : idx) {
        const auto& r = pool[i];
        if (r.is_video()) {
            ++videos;
            if (r.descriptors && r.descriptors->m_tnc >= cfg.temporal_threshold) ++temporal;
        } else {
            ++images;
        }
        if (r.descriptors && r.descriptors->m_vds > 0.0) ++vds;
        if (r.video_id) ++per_clip[*r.video_id];
        ++per_source[r.source];
        const std::string text = text::normalize(r.question) + '\x1f' + text::normalize(r.answer);
        if (!keys.emplace(text, r.visual_ref()).second) ++dup_keys;
    }
    const auto n = static_cast<std::int64_t>(idx.size());

    if (m.kind == "uniform_control") {
        const std::int64_t expected = std::min<std::int64_t>(m.audit.budget, static_cast<std::int64_t>(pool.size()));
        add("size", n == expected, std::to_string(n), std::to_string(expected));
    } else {
        const auto eligible = static_cast<std::int64_t>(dedup_and_cap(pool, profile.qa_per_video_cap).size());
        const std::int64_t expected = std::min(profile.budget, eligible);
        add("size", n == expected, std::to_string(n), "min(N_g, eligible) = " + std::to_string(expected));

        const double need = profile.temporal_ratio_min * static_cast<double>(videos);
        add("temporal_min", static_cast<double>(temporal) >= need - cfg.tolerance,
            std::to_string(temporal) + " of " + std::to_string(videos) + " videos",
            ">= " + detail::fmt_ratio(profile.temporal_ratio_min) + " of selected videos");

        const double ratio = n ? static_cast<double>(videos) / static_cast<double>(n) : 0.0;
        const bool in_band = n == 0 || (ratio >= profile.video_ratio_min - cfg.tolerance &&
                                        ratio <= profile.video_ratio_max + cfg.tolerance);
        add("video_ratio", in_band, detail::fmt_ratio(ratio),
            "[" + detail::fmt_ratio(profile.video_ratio_min) + ", " + detail::fmt_ratio(profile.video_ratio_max) + "]");

        std::int64_t over = 0;
        for (const auto& [clip, c] : per_clip)
            if (c > profile.qa_per_video_cap) ++over;
        add("qa_per_video_cap", over == 0, std::to_string(over) + " clips over cap",
            "<= " + std::to_string(profile.qa_per_video_cap) + " per clip");

        add("dedup", dup_keys == 0, std::to_string(dup_keys) + " duplicate keys", "0 duplicate keys");

        std::int64_t short_sources = 0;
        std::string detail_text;
        for (const auto& [src, floor] : profile.resolved_floors(n)) {
            const auto it = per_source.find(src);
            const std::int64_t got = it == per_source.end() ? 0 : it->second;
            if (got < floor) {
                ++short_sources;
                detail_text += (detail_text.empty() ? "" : ", ") + src + " " + std::to_string(got) + "/" +
                               std::to_string(floor);
            }
        }
        add("source_floors", short_sources == 0, short_sources ? detail_text : "all met", "per-source floors", true);
        add("vds_positive", vds >= profile.vds_pos_target, std::to_string(vds),
            ">= " + std::to_string(profile.vds_pos_target), true);
    }

    const auto& a = m.audit;
    bool consistent = a.selected == n && a.video_count == videos && a.image_count == images &&
                      a.temporal_positive == temporal && a.vds_positive == vds;
    for (const auto& [src, c] : a.source_counts) {
        auto it = per_source.find(src);
        consistent = consistent && it != per_source.end() && it->second == c;
    }
    consistent = consistent && a.source_counts.size() == per_source.size();
    add("audit_consistency", consistent,
        "selected=" + std::to_string(a.selected) + " videos=" + std::to_string(a.video_count) +
            " temporal=" + std::to_string(a.temporal_positive) + " vds+=" + std::to_string(a.vds_positive),
        "selected=" + std::to_string(n) + " videos=" + std::to_string(videos) + " temporal=" + std::to_string(temporal) +
            " vds+=" + std::to_string(vds));
    return rep;
}

} // namespace gdo
