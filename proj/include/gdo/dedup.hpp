#pragma once

#include <algorithm>
#include <compare>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gdo/error.hpp"
#include "gdo/hash.hpp"
#include "gdo/sample.hpp"
#include "gdo/text.hpp"

namespace gdo {

inline constexpr int kDefaultQaPerVideoCap = 4;

struct DedupKey {
    std::string normalized_text_hash;  // 16 hex chars
    std::string visual_ref;

    auto operator<=>(const DedupKey&) const = default;
};

inline DedupKey dedup_key(const SampleRecord& r) {
    // Unit separator keeps "ab"+"c" and "a"+"bc" apart.
    const std::string joined = text::normalize(r.question) + '\x1f' + text::normalize(r.answer);
    return {hex64(fnv1a64(joined)), r.visual_ref()};
}

struct DedupStats {
    std::size_t duplicates_removed = 0;
    std::size_t capped_removed = 0;
};

/// Drops later copies of an equal DedupKey, then keeps at most `cap` QA
/// records per video_id (highest rho first when any record of the clip is
/// scored, else file order). Survivors keep their original relative order.
inline Pool dedup_and_cap(const Pool& pool, int cap, DedupStats* stats = nullptr) {
    if (cap < 1) throw ConfigError("qa_per_video_cap must be >= 1, got " + std::to_string(cap));

    std::vector<bool> keep(pool.size(), false);
    std::set<DedupKey> seen;
    DedupStats local;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (seen.insert(dedup_key(pool[i])).second)
            keep[i] = true;
        else
            ++local.duplicates_removed;
    }

    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (keep[i] && pool[i].video_id) by_video[*pool[i].video_id].push_back(i);

    constexpr double kUnscored = -std::numeric_limits<double>::infinity();
    for (auto& [vid, members] : by_video) {
        if (members.size() <= static_cast<std::size_t>(cap)) continue;
        const bool scored = std::any_of(members.begin(), members.end(),
                                        [&](std::size_t i) { return pool[i].rho.has_value(); });
        if (scored) {
            std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return pool[a].rho.value_or(kUnscored) > pool[b].rho.value_or(kUnscored);
            });
        }
        for (std::size_t j = static_cast<std::size_t>(cap); j < members.size(); ++j) {
            keep[members[j]] = false;
            ++local.capped_removed;
        }
    }

    std::vector<SampleRecord> out;
    out.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (keep[i]) out.push_back(pool[i]);
    if (stats) *stats = local;
    return Pool(std::move(out));
}

} // namespace gdo
