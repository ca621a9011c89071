#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdo/error.hpp"
#include "gdo/text.hpp"

namespace gdo {

/// Provenance of a manifest entry. vds_positive_min and uniform_control are
/// additions to the staged-fill list: the first tops up VDS-positive samples
/// before the score tail, the second tags 10x control draws.
enum class Stage {
    temporal_min,
    video_ratio_min,
    source_floor,
    stratum_quota,
    vds_positive_min,
    score_tail,
    reservoir_fallback,
    uniform_control,
};

inline constexpr Stage kAllStages[] = {Stage::temporal_min,       Stage::video_ratio_min, Stage::source_floor,
                                       Stage::stratum_quota,      Stage::vds_positive_min, Stage::score_tail,
                                       Stage::reservoir_fallback, Stage::uniform_control};

inline std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::temporal_min: return "temporal_min";
    case Stage::video_ratio_min: return "video_ratio_min";
    case Stage::source_floor: return "source_floor";
    case Stage::stratum_quota: return "stratum_quota";
    case Stage::vds_positive_min: return "vds_positive_min";
    case Stage::score_tail: return "score_tail";
    case Stage::reservoir_fallback: return "reservoir_fallback";
    case Stage::uniform_control: return "uniform_control";
    }
    return "?";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
    for (Stage st : kAllStages)
        if (to_string(st) == s) return st;
    return std::nullopt;
}

struct ManifestEntry {
    std::string id;
    Stage stage = Stage::score_tail;

    bool operator==(const ManifestEntry&) const = default;
};

/// Achieved values recorded by the builder; recomputable from the id list.
struct BuildAudit {
    std::int64_t budget = 0;
    std::int64_t eligible = 0;  // after dedup and the QA-per-video cap
    std::int64_t target_size = 0;
    std::int64_t selected = 0;
    bool budget_shortfall = false;
    std::int64_t video_target = 0;
    std::int64_t video_count = 0;
    std::int64_t image_count = 0;
    double video_ratio = 0.0;
    std::int64_t temporal_required = 0;
    std::int64_t temporal_positive = 0;
    double temporal_ratio = 0.0;
    std::int64_t vds_target = 0;
    std::int64_t vds_positive = 0;
    bool vds_target_met = true;
    std::map<std::string, std::int64_t> source_counts;
    std::map<std::string, std::int64_t> source_floors;
    std::map<std::string, std::int64_t> stage_counts;
    std::int64_t duplicates_removed = 0;
    std::int64_t capped_removed = 0;
    std::vector<std::string> relaxations;

    nlohmann::json to_json() const {
        return {{"budget", budget},
                {"eligible", eligible},
                {"target_size", target_size},
                {"selected", selected},
                {"budget_shortfall", budget_shortfall},
                {"video_target", video_target},
                {"video_count", video_count},
                {"image_count", image_count},
                {"video_ratio", video_ratio},
                {"temporal_required", temporal_required},
                {"temporal_positive", temporal_positive},
                {"temporal_ratio", temporal_ratio},
                {"vds_target", vds_target},
                {"vds_positive", vds_positive},
                {"vds_target_met", vds_target_met},
                {"source_counts", source_counts},
                {"source_floors", source_floors},
                {"stage_counts", stage_counts},
                {"duplicates_removed", duplicates_removed},
                {"capped_removed", capped_removed},
                {"relaxations", relaxations}};
    }

    static BuildAudit from_json(const nlohmann::json& j) {
        BuildAudit a;
        a.budget = j.at("budget").get<std::int64_t>();
        a.eligible = j.at("eligible").get<std::int64_t>();
        a.target_size = j.at("target_size").get<std::int64_t>();
        a.selected = j.at("selected").get<std::int64_t>();
        a.budget_shortfall = j.at("budget_shortfall").get<bool>();
        a.video_target = j.at("video_target").get<std::int64_t>();
        a.video_count = j.at("video_count").get<std::int64_t>();
        a.image_count = j.at("image_count").get<std::int64_t>();
        a.video_ratio = j.at("video_ratio").get<double>();
        a.temporal_required = j.at("temporal_required").get<std::int64_t>();
        a.temporal_positive = j.at("temporal_positive").get<std::int64_t>();
        a.temporal_ratio = j.at("temporal_ratio").get<double>();
        a.vds_target = j.at("vds_target").get<std::int64_t>();
        a.vds_positive = j.at("vds_positive").get<std::int64_t>();
        a.vds_target_met = j.at("vds_target_met").get<bool>();
        a.source_counts = j.at("source_counts").get<std::map<std::string, std::int64_t>>();
        a.source_floors = j.at("source_floors").get<std::map<std::string, std::int64_t>>();
        a.stage_counts = j.at("stage_counts").get<std::map<std::string, std::int64_t>>();
        a.duplicates_removed = j.at("duplicates_removed").get<std::int64_t>();
        a.capped_removed = j.at("capped_removed").get<std::int64_t>();
        a.relaxations = j.at("relaxations").get<std::vector<std::string>>();
        return a;
    }
};

struct SubsetManifest {
    std::string kind = "subset";  // or "uniform_control"
    std::vector<ManifestEntry> entries;
    BuildAudit audit;
    nlohmann::json profile = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string stats_id;
    std::string ablation;  // removed score terms, e.g. "vds,ppl"

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.id);
        return out;
    }

    nlohmann::json summary_json() const {
        return {{"kind", kind}, {"audit", audit.to_json()}, {"profile", profile}, {"seed", seed}, {"stats_id", stats_id},
                {"ablation", ablation}};
    }
};

/// One {"id", "stage"} line per entry, then one summary line holding "audit".
inline void write_manifest(const SubsetManifest& m, std::ostream& out) {
    for (const auto& e : m.entries)
        out << nlohmann::json{{"id", e.id}, {"stage", std::string(to_string(e.stage))}}.dump() << '\n';
    out << m.summary_json().dump() << '\n';
}

inline void write_manifest(const SubsetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest '" + path.string() + "'");
    write_manifest(m, out);
}

inline SubsetManifest read_manifest(std::istream& in) {
    SubsetManifest m;
    bool have_summary = false;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error("manifest row " + std::to_string(row) + ": invalid JSON");
        try {
            if (j.contains("audit")) {
                m.kind = j.value("kind", std::string("subset"));
                m.audit = BuildAudit::from_json(j.at("audit"));
                m.profile = j.value("profile", nlohmann::json::object());
                m.seed = j.value("seed", std::uint64_t{0});
                m.stats_id = j.value("stats_id", std::string());
                m.ablation = j.value("ablation", std::string());
                have_summary = true;
                continue;
            }
            const auto stage_name = j.at("stage").get<std::string>();
            auto st = parse_stage(stage_name);
            if (!st) throw Error("manifest row " + std::to_string(row) + ": unknown stage '" + stage_name + "'");
            m.entries.push_back({j.at("id").get<std::string>(), *st});
        } catch (const nlohmann::json::exception& e) {
            throw Error("manifest row " + std::to_string(row) + ": " + e.what());
        }
    }
    if (!have_summary) throw Error("manifest has no audit summary line");
    return m;
}

inline SubsetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest '" + path.string() + "'");
    return read_manifest(in);
}

} // namespace gdo
