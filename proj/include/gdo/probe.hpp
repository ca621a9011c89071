#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdo/error.hpp"
#include "gdo/flow.hpp"
#include "gdo/hash.hpp"
#include "gdo/sample.hpp"
#include "gdo/text.hpp"

namespace gdo {

enum class Condition { visual, blind };

/// What the descriptor extractors need from a vision-language model.
/// Implementations must be deterministic for a given (sample, condition, seed)
/// and callable from several threads at once.
class ProbeInterface {
public:
    virtual ~ProbeInterface() = default;
    /// Teacher-forced answer loss in nats, with or without the visual input.
    virtual double teacher_forced_loss(const SampleRecord& sample, Condition condition) const = 0;
    virtual std::vector<std::string> sample_answers(const SampleRecord& sample, int n, std::uint64_t seed) const = 0;
    /// Unclamped temporal-necessity judgment; nominally in [0, 1].
    virtual double temporal_judgment(std::string_view question) const = 0;
};

struct TemporalRule {
    std::string_view phrase;  // one or two normalized tokens
    double weight;
};

/// Keyword rules used by MockProbe::temporal_judgment. Score is
/// kTemporalBase plus the weights of every distinct phrase present, clamped to [0, 1].
inline constexpr double kTemporalBase = 0.1;
inline constexpr std::array<TemporalRule, 34> kTemporalRules{{
    {"after", 0.5},       {"before", 0.5},      {"order", 0.5},     {"sequence", 0.5},
    {"then", 0.4},        {"first", 0.4},       {"next", 0.4},      {"finally", 0.4},
    {"until", 0.4},       {"previous", 0.4},    {"last", 0.3},      {"how long", 0.5},
    {"duration", 0.5},    {"happens", 0.3},     {"happen", 0.3},    {"happened", 0.3},
    {"during", 0.3},      {"while", 0.3},       {"change", 0.3},    {"changes", 0.3},
    {"changed", 0.3},     {"begins", 0.3},      {"starts", 0.3},    {"ends", 0.3},
    {"moving", 0.3},      {"moves", 0.3},       {"motion", 0.3},    {"direction", 0.3},
    {"again", 0.3},       {"times", 0.2},       {"repeat", 0.3},    {"speed", 0.3},
    {"when", 0.2},        {"eventually", 0.4},
}};

inline double keyword_temporal_score(std::string_view question) {
    const auto toks = text::tokens(question);
    double score = kTemporalBase;
    for (const auto& rule : kTemporalRules) {
        const auto words = text::split_ws(rule.phrase);
        bool hit = false;
        for (std::size_t i = 0; i + words.size() <= toks.size() && !hit; ++i) {
            hit = true;
            for (std::size_t k = 0; k < words.size(); ++k)
                if (toks[i + k] != words[k]) {
                    hit = false;
                    break;
                }
        }
        if (hit) score += rule.weight;
    }
    return std::clamp(score, 0.0, 1.0);
}

struct MockProbeConfig {
    std::uint64_t seed = 0;
    double min_loss = 0.2;
    double loss_span = 2.8;
};

/// Model-free probe. Losses and decodes are keyed hashes of (sample id,
/// condition, seed) mapped into fixed ranges; temporal judgments come from
/// kTemporalRules. Video samples get a blind-minus-visual gap in [-0.4, 1.2],
/// images in [-0.3, 0.7].
class MockProbe final : public ProbeInterface {
public:
    explicit MockProbe(MockProbeConfig cfg = {}) : cfg_(cfg) {}

    double teacher_forced_loss(const SampleRecord& s, Condition c) const override {
        const double visual = cfg_.min_loss + cfg_.loss_span * to_unit(keyed_hash({s.id, "visual"}, cfg_.seed));
        if (c == Condition::visual) return visual;
        const double u = to_unit(keyed_hash({s.id, "blind"}, cfg_.seed));
        const double gap = s.is_video() ? -0.4 + 1.6 * u : -0.3 + 1.0 * u;
        return std::max(0.0, visual + gap);
    }

    std::vector<std::string> sample_answers(const SampleRecord& s, int n, std::uint64_t seed) const override {
        const auto toks = text::tokens(s.answer);
        const double keep = 0.55 + 0.45 * to_unit(keyed_hash({s.id, "stability"}, cfg_.seed));
        std::vector<std::string> out;
        out.reserve(static_cast<std::size_t>(std::max(n, 0)));
        for (int i = 0; i < n; ++i) {
            std::string decode;
            for (std::size_t j = 0; j < toks.size(); ++j) {
                const std::uint64_t h =
                    keyed_hash({s.id, "decode", std::to_string(i), std::to_string(j)}, hash_combine(cfg_.seed, seed));
                std::string tok = toks[j];
                if (to_unit(h) >= keep) {
                    if ((h & 1) == 0) continue;
                    tok = "alt" + std::to_string((h >> 1) % 4);
                }
                if (!decode.empty()) decode += ' ';
                decode += tok;
            }
            out.push_back(decode.empty() ? "unknown" : decode);
        }
        return out;
    }

    double temporal_judgment(std::string_view question) const override { return keyword_temporal_score(question); }

private:
    MockProbeConfig cfg_;
};

/// Supplies frames for a video sample.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::vector<Frame> frames(const SampleRecord& sample) const = 0;
};

/// Loads a `*.frames.json` fixture: {"width": W, "height": H, "frames": [[...W*H values...], ...]}.
inline std::vector<Frame> load_frames_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProbeError("cannot read media '" + path.string() + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ProbeError("media '" + path.string() + "' is not valid JSON");
    try {
        const int w = j.at("width").get<int>();
        const int h = j.at("height").get<int>();
        std::vector<Frame> frames;
        for (const auto& fj : j.at("frames")) {
            Frame f(w, h);
            if (fj.size() != f.pixels.size()) throw ProbeError("media '" + path.string() + "': frame size mismatch");
            for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = fj[i].get<float>();
            frames.push_back(std::move(f));
        }
        return frames;
    } catch (const nlohmann::json::exception& e) {
        throw ProbeError("media '" + path.string() + "': " + e.what());
    }
}

struct SyntheticFrameConfig {
    int width = 16;
    int height = 16;
    int max_frames = 4;
    int max_shift = 2;
    std::uint64_t seed = 0;
    std::filesystem::path media_root;  // resolves relative *.frames.json refs
};

/// Frames for the mock pipeline. A media ref ending in ".frames.json" is
/// loaded from disk (an unreadable one is a ProbeError); anything else gets a
/// hashed texture translated by a per-clip velocity with per-frame brightness
/// drift, keyed by the visual ref.
class SyntheticFrameSource final : public FrameSource {
public:
    explicit SyntheticFrameSource(SyntheticFrameConfig cfg = {}) : cfg_(std::move(cfg)) {}

    std::vector<Frame> frames(const SampleRecord& s) const override {
        if (s.media && s.media->ends_with(".frames.json")) {
            std::filesystem::path p(*s.media);
            if (p.is_relative() && !cfg_.media_root.empty()) p = cfg_.media_root / p;
            return load_frames_file(p);
        }
        const int t = std::min(s.frame_count.value_or(cfg_.max_frames), cfg_.max_frames);
        if (t < 2) throw ProbeError("sample '" + s.id + "' has fewer than 2 frames");
        const std::string& ref = s.visual_ref();
        const std::uint64_t key = keyed_hash({ref}, cfg_.seed);
        const int span = 2 * cfg_.max_shift + 1;
        const int vx = static_cast<int>(splitmix64(key) % span) - cfg_.max_shift;
        const int vy = static_cast<int>(splitmix64(key ^ 0x5bd1e995) % span) - cfg_.max_shift;
        std::vector<Frame> out;
        for (int f = 0; f < t; ++f) {
            Frame fr(cfg_.width, cfg_.height);
            const float drift = static_cast<float>(20.0 * to_unit(hash_combine(key, static_cast<std::uint64_t>(f))));
            for (int y = 0; y < cfg_.height; ++y)
                for (int x = 0; x < cfg_.width; ++x) {
                    const auto tx = static_cast<std::uint64_t>(static_cast<std::int64_t>(x - f * vx) + 1024);
                    const auto ty = static_cast<std::uint64_t>(static_cast<std::int64_t>(y - f * vy) + 1024);
                    fr.at(x, y) = drift + static_cast<float>(200.0 * to_unit(hash_combine(key, (ty << 20) | tx)));
                }
            out.push_back(std::move(fr));
        }
        return out;
    }

private:
    SyntheticFrameConfig cfg_;
};

} // namespace gdo
