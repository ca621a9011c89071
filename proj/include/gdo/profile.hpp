#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gdo/dedup.hpp"
#include "gdo/error.hpp"

namespace gdo {

enum class ProfileName { MinLoss, Diverse, Temp, TempPlus, custom };

inline std::string_view to_string(ProfileName n) {
    switch (n) {
    case ProfileName::MinLoss: return "MinLoss";
    case ProfileName::Diverse: return "Diverse";
    case ProfileName::Temp: return "Temp";
    case ProfileName::TempPlus: return "TempPlus";
    case ProfileName::custom: return "custom";
    }
    return "custom";
}

/// Accepts "TempPlus", "Temp+", "temp_plus", "temp-plus" and similar spellings.
inline std::optional<ProfileName> parse_profile_name(std::string_view s) {
    std::string k;
    for (unsigned char c : s) {
        if (c == '+')
            k += "plus";
        else if (std::isalnum(c))
            k.push_back(static_cast<char>(std::tolower(c)));
    }
    if (k == "minloss") return ProfileName::MinLoss;
    if (k == "diverse") return ProfileName::Diverse;
    if (k == "temp") return ProfileName::Temp;
    if (k == "tempplus") return ProfileName::TempPlus;
    if (k == "custom") return ProfileName::custom;
    return std::nullopt;
}

enum class QuotaMode { pool_marginal, none };

/// One feasibility preset: budget, modality mix, temporal floor, source floors.
struct GoalProfile {
    ProfileName name = ProfileName::custom;
    std::int64_t budget = 0;  // N_g, final 1x subset size
    double video_ratio = 0.0;  // r_v target
    std::int64_t vds_pos_target = 0;
    double video_ratio_min = 0.0;
    double video_ratio_max = 1.0;
    double temporal_ratio_min = 0.0;  // within selected videos
    std::map<std::string, std::int64_t> source_floors;
    std::map<std::string, double> source_floor_ratios;  // fraction of the budget, rounded up
    double oversample_factor = 3.0;
    int qa_per_video_cap = kDefaultQaPerVideoCap;
    QuotaMode stratum_quotas = QuotaMode::pool_marginal;
    std::uint64_t seed = 17;

    bool operator==(const GoalProfile&) const = default;

    void validate() const {
        auto fail = [&](const std::string& m) {
            throw ConfigError("profile " + std::string(to_string(name)) + ": " + m);
        };
        if (budget < 1 && !(budget == 0 && name == ProfileName::custom)) fail("N_g must be >= 1");
        if (!(0.0 <= video_ratio_min && video_ratio_min <= video_ratio && video_ratio <= video_ratio_max &&
              video_ratio_max <= 1.0))
            fail("need 0 <= r_v_min <= r_v <= r_v_max <= 1");
        if (!(0.0 <= temporal_ratio_min && temporal_ratio_min <= 1.0)) fail("r_tv_min must be in [0,1]");
        if (vds_pos_target < 0) fail("vds_pos_target must be >= 0");
        if (!(oversample_factor >= 1.0)) fail("oversample_factor must be >= 1");
        if (qa_per_video_cap < 1) fail("qa_per_video_cap must be >= 1");
        for (const auto& [s, f] : source_floors)
            if (f < 0) fail("negative floor for source '" + s + "'");
        for (const auto& [s, r] : source_floor_ratios)
            if (!(r >= 0.0 && r <= 1.0)) fail("floor ratio for source '" + s + "' outside [0,1]");
    }

    /// Absolute floor per source for a subset of `size`; the larger of the
    /// count and ceil(ratio * size).
    std::map<std::string, std::int64_t> resolved_floors(std::int64_t size) const {
        auto out = source_floors;
        for (const auto& [s, r] : source_floor_ratios) {
            const auto c = static_cast<std::int64_t>(std::ceil(r * static_cast<double>(size) - 1e-9));
            out[s] = std::max(out[s], c);
        }
        return out;
    }
};

/// The four released presets.
inline GoalProfile preset(ProfileName n) {
    GoalProfile p;
    p.name = n;
    switch (n) {
    case ProfileName::MinLoss:
        p.budget = 12900, p.video_ratio = 0.32, p.vds_pos_target = 2600;
        p.video_ratio_min = 0.15, p.video_ratio_max = 0.32, p.temporal_ratio_min = 0.05;
        break;
    case ProfileName::Diverse:
        p.budget = 42900, p.video_ratio = 0.45, p.vds_pos_target = 5000;
        p.video_ratio_min = 0.25, p.video_ratio_max = 0.45, p.temporal_ratio_min = 0.15;
        break;
    case ProfileName::Temp:
        p.budget = 33300, p.video_ratio = 0.50, p.vds_pos_target = 6500;
        p.video_ratio_min = 0.35, p.video_ratio_max = 0.50, p.temporal_ratio_min = 0.20;
        break;
    case ProfileName::TempPlus:
        p.budget = 53300, p.video_ratio = 0.59, p.vds_pos_target = 9000;
        p.video_ratio_min = 0.50, p.video_ratio_max = 0.64, p.temporal_ratio_min = 0.38;
        break;
    case ProfileName::custom: throw ConfigError("no preset for a custom profile");
    }
    return p;
}

inline nlohmann::json profile_to_json(const GoalProfile& p) {
    nlohmann::json j;
    j["name"] = std::string(to_string(p.name));
    j["N_g"] = p.budget;
    j["r_v"] = p.video_ratio;
    j["vds_pos_target"] = p.vds_pos_target;
    j["r_v_min"] = p.video_ratio_min;
    j["r_v_max"] = p.video_ratio_max;
    j["r_tv_min"] = p.temporal_ratio_min;
    j["source_floors"] = p.source_floors;
    j["source_floor_ratios"] = p.source_floor_ratios;
    j["oversample_factor"] = p.oversample_factor;
    j["qa_per_video_cap"] = p.qa_per_video_cap;
    j["stratum_quotas"] = p.stratum_quotas == QuotaMode::none ? "none" : "pool_marginal";
    j["seed"] = p.seed;
    return j;
}

inline GoalProfile profile_from_json(const nlohmann::json& j) {
    GoalProfile p;
    try {
        const auto name = j.at("name").get<std::string>();
        auto parsed = parse_profile_name(name);
        if (!parsed) throw ConfigError("unknown profile name '" + name + "'");
        p.name = *parsed;
        p.budget = j.at("N_g").get<std::int64_t>();
        p.video_ratio = j.at("r_v").get<double>();
        p.vds_pos_target = j.at("vds_pos_target").get<std::int64_t>();
        p.video_ratio_min = j.at("r_v_min").get<double>();
        p.video_ratio_max = j.at("r_v_max").get<double>();
        p.temporal_ratio_min = j.at("r_tv_min").get<double>();
        if (j.contains("source_floors")) p.source_floors = j.at("source_floors").get<std::map<std::string, std::int64_t>>();
        if (j.contains("source_floor_ratios"))
            p.source_floor_ratios = j.at("source_floor_ratios").get<std::map<std::string, double>>();
        p.oversample_factor = j.value("oversample_factor", 3.0);
        p.qa_per_video_cap = j.value("qa_per_video_cap", kDefaultQaPerVideoCap);
        const auto quotas = j.value("stratum_quotas", std::string("pool_marginal"));
        if (quotas == "none")
            p.stratum_quotas = QuotaMode::none;
        else if (quotas == "pool_marginal")
            p.stratum_quotas = QuotaMode::pool_marginal;
        else
            throw ConfigError("unknown stratum_quotas mode '" + quotas + "'");
        p.seed = j.value("seed", std::uint64_t{17});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
    p.validate();
    return p;
}

inline GoalProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile '" + path.string() + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("profile '" + path.string() + "' is not valid JSON");
    return profile_from_json(j);
}

/// File stem used for the shipped preset files (minloss.json, temp_plus.json, ...).
inline std::string preset_file_stem(ProfileName n) {
    switch (n) {
    case ProfileName::MinLoss: return "minloss";
    case ProfileName::Diverse: return "diverse";
    case ProfileName::Temp: return "temp";
    case ProfileName::TempPlus: return "temp_plus";
    case ProfileName::custom: return "custom";
    }
    return "custom";
}

} // namespace gdo
