#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gdo/dedup.hpp"
#include "gdo/error.hpp"
#include "gdo/hash.hpp"
#include "gdo/manifest.hpp"
#include "gdo/profile.hpp"
#include "gdo/reservoir.hpp"
#include "gdo/sample.hpp"
#include "gdo/strata.hpp"

namespace gdo {

struct BuildOptions {
    StrataConfig strata;
    unsigned workers = 1;
    bool run_score_tail = true;  // also gates the reservoir fallback
    std::string stats_id;
};

inline constexpr double kRatioEps = 1e-9;

inline std::int64_t ceil_count(double ratio, std::int64_t n) {
    return static_cast<std::int64_t>(std::ceil(ratio * static_cast<double>(n) - kRatioEps));
}

inline std::int64_t floor_count(double ratio, std::int64_t n) {
    return static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(n) + kRatioEps));
}

/// Video count the builder aims for: the count closest to r_v * n (ties to
/// the smaller) among those satisfying the ratio band, pool availability and
/// the temporal floor. Throws InfeasibleError naming the binding constraint.
inline std::int64_t plan_video_count(const GoalProfile& p, std::int64_t n, std::int64_t videos, std::int64_t images,
                                     std::int64_t temporal_videos) {
    if (n == 0) return 0;
    const std::int64_t lo = ceil_count(p.video_ratio_min, n);
    const std::int64_t hi = floor_count(p.video_ratio_max, n);
    if (lo > hi)
        throw InfeasibleError("video_ratio_min", "no video count out of " + std::to_string(n) +
                                                     " lies in [" + std::to_string(p.video_ratio_min) + ", " +
                                                     std::to_string(p.video_ratio_max) + "]");
    if (lo > videos)
        throw InfeasibleError("video_ratio_min", "need at least " + std::to_string(lo) + " videos, pool has " +
                                                     std::to_string(videos));
    if (n - hi > images)
        throw InfeasibleError("video_ratio_max", "need at least " + std::to_string(n - hi) +
                                                     " images, pool has " + std::to_string(images));
    const std::int64_t vmin = std::max(lo, n - images);
    std::int64_t vmax = std::min(hi, videos);
    while (vmax >= vmin && ceil_count(p.temporal_ratio_min, vmax) > temporal_videos) --vmax;
    if (vmax < vmin)
        throw InfeasibleError("temporal_min", "need " + std::to_string(ceil_count(p.temporal_ratio_min, vmin)) +
                                                  " temporal-positive videos, pool has " +
                                                  std::to_string(temporal_videos));
    const double target = p.video_ratio * static_cast<double>(n);
    const auto below = std::clamp(static_cast<std::int64_t>(std::floor(target)), vmin, vmax);
    const auto above = std::clamp(static_cast<std::int64_t>(std::ceil(target)), vmin, vmax);
    return (std::abs(static_cast<double>(above) - target) < std::abs(static_cast<double>(below) - target)) ? above
                                                                                                            : below;
}

namespace detail {

class FillState {
public:
    FillState(const Pool& pool, std::int64_t size, std::int64_t video_cap, const StrataConfig& strata)
        : pool_(pool), size_(size), video_cap_(video_cap), image_cap_(size - video_cap),
          stage_(pool.size()), temporal_(pool.size()), vds_(pool.size()) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            temporal_[i] = is_temporal_positive(pool[i], strata);
            vds_[i] = pool[i].descriptors && pool[i].descriptors->m_vds > 0.0;
        }
    }

    bool selected(std::size_t i) const { return stage_[i].has_value(); }
    bool full() const { return total() >= size_; }
    std::int64_t total() const { return videos_ + images_; }
    bool has_room(std::size_t i) const {
        return !full() && (pool_[i].is_video() ? videos_ < video_cap_ : images_ < image_cap_);
    }

    /// Admits i under `stage` if unselected and within the modality caps.
    bool admit(std::size_t i, Stage stage) {
        if (selected(i) || !has_room(i)) return false;
        stage_[i] = stage;
        order_.push_back(i);
        const auto& r = pool_[i];
        (r.is_video() ? videos_ : images_)++;
        if (temporal_[i]) ++temporal_count_;
        if (vds_[i]) ++vds_count_;
        ++source_counts_[r.source];
        ++stratum_counts_[r.strata];
        return true;
    }

    bool temporal(std::size_t i) const { return temporal_[i]; }
    bool vds_positive(std::size_t i) const { return vds_[i]; }
    std::int64_t videos() const { return videos_; }
    std::int64_t temporal_count() const { return temporal_count_; }
    std::int64_t vds_count() const { return vds_count_; }
    std::int64_t source_count(const std::string& s) const {
        auto it = source_counts_.find(s);
        return it == source_counts_.end() ? 0 : it->second;
    }
    std::int64_t stratum_count(const StratumKey& k) const {
        auto it = stratum_counts_.find(k);
        return it == stratum_counts_.end() ? 0 : it->second;
    }
    const std::vector<std::size_t>& order() const { return order_; }
    Stage stage(std::size_t i) const { return *stage_[i]; }

private:
    const Pool& pool_;
    std::int64_t size_;
    std::int64_t video_cap_;
    std::int64_t image_cap_;
    std::vector<std::optional<Stage>> stage_;
    std::vector<bool> temporal_;
    std::vector<bool> vds_;
    std::vector<std::size_t> order_;
    std::int64_t videos_ = 0;
    std::int64_t images_ = 0;
    std::int64_t temporal_count_ = 0;
    std::int64_t vds_count_ = 0;
    std::map<std::string, std::int64_t> source_counts_;
    std::map<StratumKey, std::int64_t> stratum_counts_;
};

} // namespace detail

/// Staged fill of a 1x subset from a scored pool:
///   1. top-rho temporal-positive videos up to the temporal floor of the planned video count
///   2. top-rho videos up to the minimum video ratio
///   3. source floors, in rho order
///   4. per-stratum quotas drawn from the stratum reservoirs
///   5. VDS-positive samples up to the profile's target
///   6. score tail over the top oversample_factor * N candidates
///   7. reservoir fallback, then any remaining candidate
/// Every stage respects the per-modality caps fixed by the planned video
/// count, so the temporal floor and the ratio band hold by construction.
inline SubsetManifest build_subset(const Pool& scored, const GoalProfile& profile, const BuildOptions& opts = {}) {
    profile.validate();
    for (const auto& r : scored) {
        if (!r.rho) throw Error("build_subset: sample '" + r.id + "' is not scored");
        if (!r.descriptors) throw Error("build_subset: sample '" + r.id + "' has no descriptors");
    }

    DedupStats dstats;
    const Pool pool = dedup_and_cap(scored, profile.qa_per_video_cap, &dstats);

    std::vector<std::size_t> ranked(pool.size());
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::sort(ranked.begin(), ranked.end(),
              [&](std::size_t a, std::size_t b) { return ranks_before(candidate(pool, a), candidate(pool, b)); });

    std::int64_t videos = 0, images = 0, temporal_videos = 0;
    for (const auto& r : pool) {
        (r.is_video() ? videos : images)++;
        if (is_temporal_positive(r, opts.strata)) ++temporal_videos;
    }

    const auto eligible = static_cast<std::int64_t>(pool.size());
    const std::int64_t n = std::min(profile.budget, eligible);
    const std::int64_t video_target = plan_video_count(profile, n, videos, images, temporal_videos);
    const std::int64_t image_target = n - video_target;
    const std::int64_t temporal_required = ceil_count(profile.temporal_ratio_min, video_target);
    const std::int64_t video_min = ceil_count(profile.video_ratio_min, n);

    detail::FillState st(pool, n, video_target, opts.strata);
    std::vector<std::string> relaxations;

    // 1. temporal minima
    for (std::size_t i : ranked) {
        if (st.temporal_count() >= temporal_required) break;
        if (st.temporal(i)) st.admit(i, Stage::temporal_min);
    }

    // 2. video-ratio minima
    for (std::size_t i : ranked) {
        if (st.videos() >= video_min) break;
        if (pool[i].is_video()) st.admit(i, Stage::video_ratio_min);
    }

    // 3. source floors
    const auto floors = profile.resolved_floors(n);
    if (!floors.empty()) {
        for (std::size_t i : ranked) {
            auto it = floors.find(pool[i].source);
            if (it != floors.end() && st.source_count(it->first) < it->second) st.admit(i, Stage::source_floor);
        }
        for (const auto& [src, floor] : floors)
            if (st.source_count(src) < floor)
                relaxations.push_back("source_floor relaxed for '" + src + "': " + std::to_string(st.source_count(src)) +
                                      " of " + std::to_string(floor));
    }

    // 4. stratum quotas, proportional to the pool within each modality
    std::map<StratumKey, std::int64_t> stratum_sizes, quotas;
    for (const auto& r : pool) ++stratum_sizes[r.strata];
    for (const auto& [key, count] : stratum_sizes) {
        const bool video_stratum = key.duration_bucket != DurationBucket::na;
        const std::int64_t modality_total = video_stratum ? videos : images;
        const std::int64_t modality_target = video_stratum ? video_target : image_target;
        quotas[key] = (profile.stratum_quotas == QuotaMode::none || modality_total == 0)
                          ? 0
                          : modality_target * count / modality_total;
    }
    const auto reservoirs = fill_reservoirs(
        pool,
        [&](const StratumKey& k) {
            return static_cast<std::size_t>(
                std::max<double>(1.0, std::ceil(profile.oversample_factor * static_cast<double>(quotas.at(k)))));
        },
        opts.workers);
    std::vector<Candidate> reservoir_members;
    for (const auto& [key, members] : reservoirs) reservoir_members.insert(reservoir_members.end(), members.begin(), members.end());
    std::sort(reservoir_members.begin(), reservoir_members.end(), ranks_before);

    if (profile.stratum_quotas != QuotaMode::none) {
        for (const auto& c : reservoir_members) {
            const auto& key = pool[c.index].strata;
            if (st.stratum_count(key) < quotas.at(key)) st.admit(c.index, Stage::stratum_quota);
        }
        std::int64_t unmet = 0, deficit = 0;
        for (const auto& [key, q] : quotas)
            if (st.stratum_count(key) < q) {
                ++unmet;
                deficit += q - st.stratum_count(key);
            }
        if (unmet > 0)
            relaxations.push_back("stratum_quota relaxed for " + std::to_string(unmet) + " strata (deficit " +
                                  std::to_string(deficit) + ")");
    }

    // 5. VDS-positive target
    for (std::size_t i : ranked) {
        if (st.vds_count() >= profile.vds_pos_target || st.full()) break;
        if (st.vds_positive(i)) st.admit(i, Stage::vds_positive_min);
    }

    if (opts.run_score_tail) {
        // 6. score tail over the oversampled candidate window
        const auto window = static_cast<std::size_t>(
            std::min<double>(static_cast<double>(ranked.size()),
                             std::ceil(profile.oversample_factor * static_cast<double>(n))));
        for (std::size_t k = 0; k < window && !st.full(); ++k) st.admit(ranked[k], Stage::score_tail);

        // 7. reservoir fallback
        for (const auto& c : reservoir_members) {
            if (st.full()) break;
            st.admit(c.index, Stage::reservoir_fallback);
        }
        for (std::size_t i : ranked) {
            if (st.full()) break;
            st.admit(i, Stage::reservoir_fallback);
        }
    }

    SubsetManifest m;
    m.kind = "subset";
    m.profile = profile_to_json(profile);
    m.seed = profile.seed;
    m.stats_id = opts.stats_id;
    for (std::size_t i : st.order()) m.entries.push_back({pool[i].id, st.stage(i)});

    BuildAudit& a = m.audit;
    a.budget = profile.budget;
    a.eligible = eligible;
    a.target_size = n;
    a.selected = static_cast<std::int64_t>(m.entries.size());
    a.budget_shortfall = profile.budget > eligible;
    a.video_target = video_target;
    a.temporal_required = temporal_required;
    a.vds_target = profile.vds_pos_target;
    a.source_floors = floors;
    a.duplicates_removed = static_cast<std::int64_t>(dstats.duplicates_removed);
    a.capped_removed = static_cast<std::int64_t>(dstats.capped_removed);
    for (std::size_t i : st.order()) {
        const auto& r = pool[i];
        (r.is_video() ? a.video_count : a.image_count)++;
        if (st.temporal(i)) ++a.temporal_positive;
        if (st.vds_positive(i)) ++a.vds_positive;
        ++a.source_counts[r.source];
        ++a.stage_counts[std::string(to_string(st.stage(i)))];
    }
    a.video_ratio = a.selected ? static_cast<double>(a.video_count) / static_cast<double>(a.selected) : 0.0;
    a.temporal_ratio =
        a.video_count ? static_cast<double>(a.temporal_positive) / static_cast<double>(a.video_count) : 0.0;
    a.vds_target_met = a.vds_positive >= a.vds_target;
    if (!a.vds_target_met)
        relaxations.push_back("vds_positive target unmet: " + std::to_string(a.vds_positive) + " of " +
                              std::to_string(a.vds_target));
    if (a.budget_shortfall)
        relaxations.push_back("budget shortfall: pool has " + std::to_string(eligible) + " eligible of " +
                              std::to_string(profile.budget) + " requested");
    a.relaxations = std::move(relaxations);
    return m;
}

/// Seeded uniform draw without replacement; entries keep pool order.
inline SubsetManifest draw_uniform_control(const Pool& pool, std::int64_t size, std::uint64_t seed) {
    if (size < 0) throw ConfigError("control size must be >= 0");
    const auto n = static_cast<std::size_t>(std::min<std::int64_t>(size, static_cast<std::int64_t>(pool.size())));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(bounded_draw(rng, idx.size() - k));
        std::swap(idx[k], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    SubsetManifest m;
    m.kind = "uniform_control";
    m.seed = seed;
    BuildAudit& a = m.audit;
    a.budget = size;
    a.eligible = static_cast<std::int64_t>(pool.size());
    a.target_size = static_cast<std::int64_t>(n);
    a.budget_shortfall = size > static_cast<std::int64_t>(pool.size());
    for (std::size_t i : idx) {
        const auto& r = pool[i];
        m.entries.push_back({r.id, Stage::uniform_control});
        (r.is_video() ? a.video_count : a.image_count)++;
        if (is_temporal_positive(r)) ++a.temporal_positive;
        if (r.descriptors && r.descriptors->m_vds > 0.0) ++a.vds_positive;
        ++a.source_counts[r.source];
    }
    a.selected = static_cast<std::int64_t>(n);
    a.stage_counts[std::string(to_string(Stage::uniform_control))] = a.selected;
    a.video_ratio = n ? static_cast<double>(a.video_count) / static_cast<double>(n) : 0.0;
    a.temporal_ratio = a.video_count ? static_cast<double>(a.temporal_positive) / static_cast<double>(a.video_count) : 0.0;
    if (a.budget_shortfall)
        a.relaxations.push_back("budget shortfall: pool has " + std::to_string(pool.size()) + " of " +
                                std::to_string(size) + " requested");
    return m;
}

} // namespace gdo
