#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gdo/error.hpp"

namespace gdo {

/// Single-channel intensity grid, row-major.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Frame() = default;
    Frame(int w, int h, float fill = 0.0f) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    double mean_intensity() const {
        if (pixels.empty()) return 0.0;
        double s = 0.0;
        for (float p : pixels) s += p;
        return s / static_cast<double>(pixels.size());
    }
};

/// Per-pixel displacement u(p) such that next(p + u) ≈ prev(p).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<std::array<float, 2>> vectors;

    FlowField() = default;
    FlowField(int w, int h, std::array<float, 2> fill = {0.0f, 0.0f})
        : width(w), height(h), vectors(static_cast<std::size_t>(w) * h, fill) {}

    double mean_magnitude() const {
        if (vectors.empty()) return 0.0;
        double s = 0.0;
        for (const auto& v : vectors) s += std::hypot(static_cast<double>(v[0]), static_cast<double>(v[1]));
        return s / static_cast<double>(vectors.size());
    }
};

class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual FlowField estimate(const Frame& prev, const Frame& next) const = 0;
};

struct BlockMatchConfig {
    int block_radius = 4;   // window is (2r+1)^2
    int search_radius = 6;  // candidate displacements in [-s, s]^2
};

/// Exhaustive integer block matching. For each pixel the displacement with the
/// lowest mean absolute difference over the in-bounds part of the window wins;
/// ties go to the shortest displacement, then smaller dy, then smaller dx.
class BlockMatcher final : public FlowEstimator {
public:
    explicit BlockMatcher(BlockMatchConfig cfg = {}) : cfg_(cfg) {}

    FlowField estimate(const Frame& prev, const Frame& next) const override {
        if (prev.width != next.width || prev.height != next.height)
            throw Error("block matcher: frame dimensions differ");
        FlowField field(prev.width, prev.height);
        const int r = cfg_.block_radius;
        const int s = cfg_.search_radius;
        for (int y = 0; y < prev.height; ++y) {
            for (int x = 0; x < prev.width; ++x) {
                double best_cost = std::numeric_limits<double>::infinity();
                int best_len = std::numeric_limits<int>::max();
                int best_dx = 0, best_dy = 0;
                for (int dy = -s; dy <= s; ++dy) {
                    for (int dx = -s; dx <= s; ++dx) {
                        double sad = 0.0;
                        int n = 0;
                        for (int oy = -r; oy <= r; ++oy) {
                            for (int ox = -r; ox <= r; ++ox) {
                                const int ax = x + ox, ay = y + oy;
                                const int bx = ax + dx, by = ay + dy;
                                if (!prev.contains(ax, ay) || !next.contains(bx, by)) continue;
                                sad += std::abs(static_cast<double>(prev.at(ax, ay)) - next.at(bx, by));
                                ++n;
                            }
                        }
                        if (n == 0) continue;
                        const double cost = sad / n;
                        const int len = dx * dx + dy * dy;
                        // Candidates are visited in (dy, dx) order, so equal cost and
                        // equal length keep the earlier (smaller dy, dx) one.
                        if (cost < best_cost || (cost == best_cost && len < best_len)) {
                            best_cost = cost;
                            best_len = len;
                            best_dx = dx;
                            best_dy = dy;
                        }
                    }
                }
                field.vectors[static_cast<std::size_t>(y) * prev.width + x] = {static_cast<float>(best_dx),
                                                                                static_cast<float>(best_dy)};
            }
        }
        return field;
    }

private:
    BlockMatchConfig cfg_;
};

/// Mean over adjacent frame pairs of the mean per-pixel flow magnitude.
inline double compute_flow(std::span<const Frame> frames, const FlowEstimator& estimator) {
    if (frames.size() < 2) throw Error("compute_flow: need at least 2 frames, got " + std::to_string(frames.size()));
    for (const auto& f : frames)
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw Error("compute_flow: frame dimensions differ");
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const FlowField field = estimator.estimate(frames[t], frames[t + 1]);
        if (field.width != frames[t].width || field.height != frames[t].height)
            throw Error("compute_flow: estimator returned a field of the wrong size");
        total += field.mean_magnitude();
    }
    return total / static_cast<double>(frames.size() - 1);
}

/// Population standard deviation of per-frame mean intensity.
inline double frame_diversity(std::span<const Frame> frames) {
    if (frames.empty()) return 0.0;
    double mean = 0.0;
    std::vector<double> means;
    means.reserve(frames.size());
    for (const auto& f : frames) {
        means.push_back(f.mean_intensity());
        mean += means.back();
    }
    mean /= static_cast<double>(frames.size());
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    return std::sqrt(var / static_cast<double>(frames.size()));
}

} // namespace gdo
