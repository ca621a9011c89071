#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gdo/error.hpp"
#include "gdo/hash.hpp"
#include "gdo/parallel.hpp"
#include "gdo/sample.hpp"
#include "gdo/text.hpp"

namespace gdo {

using Embedding = std::vector<double>;

/// Signed feature hashing of words into a fixed-width unit vector.
struct HashingEmbedder {
    int dims = 32;

    Embedding embed_words(const std::vector<std::string>& words) const {
        Embedding v(static_cast<std::size_t>(dims), 0.0);
        for (const auto& w : words) {
            const std::uint64_t h = fnv1a64(w);
            v[h % static_cast<std::uint64_t>(dims)] += (h >> 63) ? -1.0 : 1.0;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
        }
        return v;
    }

    Embedding embed_text(std::string_view s) const { return embed_words(text::tokens(s)); }
};

/// Embeddings for the coverage neighborhoods. Text uses question and answer;
/// vision uses the words of the visual ref (clip id or media path).
inline Embedding text_embedding(const SampleRecord& r, const HashingEmbedder& e) {
    return e.embed_text(r.question + " " + r.answer);
}

inline Embedding vision_embedding(const SampleRecord& r, const HashingEmbedder& e) {
    return e.embed_words(text::alnum_words(r.visual_ref()));
}

/// Brute-force radius neighborhoods over the concatenation of a text and a
/// vision embedding per point. Default radius is the median pairwise distance
/// (exact up to kExactMedianLimit points, otherwise over a fixed-seed sample of pairs).
class NeighborIndex {
public:
    static constexpr std::size_t kExactMedianLimit = 3000;
    static constexpr std::size_t kSampledPairs = 2'000'000;

    NeighborIndex() = default;

    static NeighborIndex build(const std::vector<Embedding>& text, const std::vector<Embedding>& vision,
                               std::optional<double> radius = std::nullopt, unsigned workers = 1) {
        if (text.size() != vision.size()) throw Error("neighbor index: text/vision sizes differ");
        NeighborIndex idx;
        idx.points_.reserve(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            Embedding p = text[i];
            p.insert(p.end(), vision[i].begin(), vision[i].end());
            if (!idx.points_.empty() && p.size() != idx.points_.front().size())
                throw Error("neighbor index: embedding widths differ");
            idx.points_.push_back(std::move(p));
        }
        idx.radius_ = radius ? *radius : idx.median_pairwise_distance();
        idx.counts_.assign(idx.points_.size(), 0);
        const std::size_t n = idx.points_.size();
        parallel_for(n, workers, [&](std::size_t i) {
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && idx.distance(i, j) <= idx.radius_) ++c;
            idx.counts_[i] = c;
        });
        idx.built_ = true;
        return idx;
    }

    bool built() const noexcept { return built_; }
    std::size_t size() const noexcept { return points_.size(); }
    double radius() const noexcept { return radius_; }
    std::size_t neighbor_count(std::size_t i) const { return counts_.at(i); }

    /// Fraction of the other points within the radius; 0 for a singleton.
    double local_density(std::size_t i) const {
        if (points_.size() < 2) return 0.0;
        return static_cast<double>(counts_.at(i)) / static_cast<double>(points_.size() - 1);
    }

    double distance(std::size_t i, std::size_t j) const {
        double s = 0.0;
        const auto& a = points_[i];
        const auto& b = points_[j];
        for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::sqrt(s);
    }

private:
    double median_pairwise_distance() const {
        const std::size_t n = points_.size();
        if (n < 2) return 0.0;
        std::vector<double> d;
        if (n <= kExactMedianLimit) {
            d.reserve(n * (n - 1) / 2);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) d.push_back(distance(i, j));
        } else {
            std::mt19937_64 rng(0x636f766572616765ULL);
            d.reserve(kSampledPairs);
            while (d.size() < kSampledPairs) {
                const auto i = bounded_draw(rng, n);
                const auto j = bounded_draw(rng, n);
                if (i != j) d.push_back(distance(i, j));
            }
        }
        const std::size_t mid = d.size() / 2;
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
        double med = d[mid];
        if (d.size() % 2 == 0) {
            const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
            med = 0.5 * (med + lower);
        }
        return med;
    }

    std::vector<Embedding> points_;
    std::vector<std::size_t> counts_;
    double radius_ = 0.0;
    bool built_ = false;
};

class SourceHistogram {
public:
    SourceHistogram() = default;

    static SourceHistogram of(const Pool& pool) {
        SourceHistogram h;
        for (const auto& r : pool) h.add(r.source);
        return h;
    }

    void add(const std::string& source, std::size_t n = 1) {
        counts_[source] += n;
        total_ += n;
    }

    std::size_t count(const std::string& source) const {
        auto it = counts_.find(source);
        return it == counts_.end() ? 0 : it->second;
    }
    std::size_t total() const noexcept { return total_; }
    const std::map<std::string, std::size_t>& counts() const noexcept { return counts_; }

    double share(const std::string& source) const {
        return total_ == 0 ? 0.0 : static_cast<double>(count(source)) / static_cast<double>(total_);
    }
    double rarity(const std::string& source) const { return 1.0 - share(source); }

private:
    std::map<std::string, std::size_t> counts_;
    std::size_t total_ = 0;
};

struct CoverageConfig {
    double density_weight = 0.7;
    double source_weight = 0.3;
    std::optional<double> radius;  // default: median pairwise distance
    int embedding_dims = 32;
};

/// density_weight * (1 - local density) + source_weight * (1 - source share).
inline double compute_coverage(std::size_t index, const std::string& source, const NeighborIndex& neighbors,
                               const SourceHistogram& sources, const CoverageConfig& cfg = {}) {
    if (!neighbors.built()) throw Error("coverage: neighbor index not built");
    if (neighbors.size() == 0 || sources.total() == 0) throw Error("coverage: empty pool");
    if (index >= neighbors.size()) throw Error("coverage: index out of range");
    return cfg.density_weight * (1.0 - neighbors.local_density(index)) + cfg.source_weight * sources.rarity(source);
}

inline NeighborIndex build_neighbor_index(const Pool& pool, const CoverageConfig& cfg = {}, unsigned workers = 1) {
    HashingEmbedder e{cfg.embedding_dims};
    std::vector<Embedding> t(pool.size()), v(pool.size());
    parallel_for(pool.size(), workers, [&](std::size_t i) {
        t[i] = text_embedding(pool[i], e);
        v[i] = vision_embedding(pool[i], e);
    });
    return NeighborIndex::build(t, v, cfg.radius, workers);
}

} // namespace gdo
