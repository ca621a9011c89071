#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdo/error.hpp"
#include "gdo/text.hpp"

namespace gdo {

inline constexpr std::int64_t kUniformBaselineBudget = 512000;

struct TrajectoryPoint {
    std::int64_t samples_seen = 0;
    double accuracy = 0.0;  // percent
};

using Trajectory = std::vector<TrajectoryPoint>;

struct EfficiencyReport {
    double reference_score = 0.0;
    std::optional<std::int64_t> peak_match_samples;
    std::optional<double> reduction;  // baseline_budget / peak_match_samples, one decimal
    double final_score = 0.0;
    double delta_pp = 0.0;  // final_score - reference_score
};

/// Round half up at `decimals` places. The nudge absorbs binary
/// representation error so 14.45 rounds to 14.5.
inline double round_half_up(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::floor(v * scale + 0.5 + 1e-9) / scale;
}

/// "+1.38", "-0.40", "+0.00".
inline std::string format_delta(double d) {
    double r = std::round(d * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;  // drop negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.2f", r);
    return buf;
}

inline std::string format_reduction(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fx", r);
    return buf;
}

inline void validate_trajectory(const Trajectory& t) {
    if (t.empty()) throw Error("trajectory is empty");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].samples_seen < 0) throw Error("trajectory point " + std::to_string(i) + ": negative samples_seen");
        if (!(t[i].accuracy >= 0.0 && t[i].accuracy <= 100.0))
            throw Error("trajectory point " + std::to_string(i) + ": accuracy outside [0,100]");
        if (i > 0 && t[i].samples_seen <= t[i - 1].samples_seen)
            throw Error("trajectory is not strictly increasing at point " + std::to_string(i));
    }
}

/// First recorded point at or above the reference; no interpolation.
inline EfficiencyReport peak_match(const Trajectory& t, double reference_score,
                                   std::int64_t baseline_budget = kUniformBaselineBudget) {
    if (!(reference_score >= 0.0 && reference_score <= 100.0)) throw Error("reference score outside [0,100]");
    if (baseline_budget <= 0) throw Error("baseline budget must be positive");
    validate_trajectory(t);
    EfficiencyReport r;
    r.reference_score = reference_score;
    for (const auto& p : t)
        if (p.accuracy >= reference_score) {
            r.peak_match_samples = p.samples_seen;
            break;
        }
    if (r.peak_match_samples && *r.peak_match_samples > 0)
        r.reduction = round_half_up(static_cast<double>(baseline_budget) / static_cast<double>(*r.peak_match_samples), 1);
    r.final_score = t.back().accuracy;
    r.delta_pp = r.final_score - reference_score;
    return r;
}

/// CSV with header "samples_seen,accuracy".
inline Trajectory read_trajectory(std::istream& in) {
    Trajectory t;
    std::string line;
    std::size_t row = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++row;
        const auto s = text::trim(line);
        if (s.empty()) continue;
        if (!header) {
            if (s != "samples_seen,accuracy")
                throw Error("trajectory row 1: expected header 'samples_seen,accuracy'");
            header = true;
            continue;
        }
        const auto comma = s.find(',');
        if (comma == std::string_view::npos) throw Error("trajectory row " + std::to_string(row) + ": expected 2 columns");
        try {
            std::size_t used = 0;
            const std::string a(text::trim(s.substr(0, comma)));
            const std::string b(text::trim(s.substr(comma + 1)));
            TrajectoryPoint p;
            p.samples_seen = std::stoll(a, &used);
            if (used != a.size()) throw std::invalid_argument(a);
            p.accuracy = std::stod(b, &used);
            if (used != b.size()) throw std::invalid_argument(b);
            t.push_back(p);
        } catch (const std::logic_error&) {
            throw Error("trajectory row " + std::to_string(row) + ": not numeric");
        }
    }
    if (!header) throw Error("trajectory has no header");
    return t;
}

inline Trajectory read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trajectory '" + path.string() + "'");
    return read_trajectory(in);
}

inline std::string render_efficiency(const std::string& benchmark, const EfficiencyReport& r) {
    std::ostringstream os;
    char ref[32];
    std::snprintf(ref, sizeof ref, "%.2f", r.reference_score);
    os << benchmark << "  reference=" << ref << "  peak_match="
       << (r.peak_match_samples ? std::to_string(*r.peak_match_samples) : std::string("none"))
       << "  reduction=" << (r.reduction ? format_reduction(*r.reduction) : std::string("n/a"))
       << "  delta=" << format_delta(r.delta_pp) << '\n';
    return os.str();
}

struct DeltaRow {
    std::string benchmark;
    double gdo = 0.0;
    double baseline = 0.0;
    double delta = 0.0;
};

inline std::vector<DeltaRow> delta_table(const std::map<std::string, double>& gdo_scores,
                                         const std::map<std::string, double>& baseline_scores) {
    std::vector<DeltaRow> rows;
    for (const auto& [k, v] : gdo_scores) {
        auto it = baseline_scores.find(k);
        if (it == baseline_scores.end()) throw Error("benchmark '" + k + "' has no baseline score");
        rows.push_back({k, v, it->second, v - it->second});
    }
    for (const auto& [k, v] : baseline_scores)
        if (!gdo_scores.count(k)) throw Error("benchmark '" + k + "' has no GDO score");
    return rows;
}

inline std::string render_delta_table(const std::vector<DeltaRow>& rows) {
    std::ostringstream os;
    os << "benchmark,gdo,baseline,delta_pp\n";
    for (const auto& r : rows) {
        char g[32], b[32];
        std::snprintf(g, sizeof g, "%.2f", r.gdo);
        std::snprintf(b, sizeof b, "%.2f", r.baseline);
        os << r.benchmark << ',' << g << ',' << b << ',' << format_delta(r.delta) << '\n';
    }
    return os.str();
}

} // namespace gdo
