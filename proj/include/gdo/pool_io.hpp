#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdo/error.hpp"
#include "gdo/sample.hpp"
#include "gdo/strata.hpp"
#include "gdo/text.hpp"

namespace gdo {

using json = nlohmann::json;

enum class PoolFormat { jsonl, tsv };

inline PoolFormat format_from_path(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    return (ext == ".tsv" || ext == ".tab") ? PoolFormat::tsv : PoolFormat::jsonl;
}

/// One rejected row. `row` is 1-based (file line number).
struct Diagnostic {
    std::size_t row = 0;
    std::string field;
    std::string message;

    std::string to_string() const {
        return "row " + std::to_string(row) + ": field '" + field + "': " + message;
    }
};

struct IngestResult {
    Pool pool;
    std::vector<Diagnostic> rejected;
};

inline constexpr std::array<std::string_view, 9> kDescriptorFields{
    "m_flow", "m_vds", "m_tnc", "m_sc", "m_ppl", "m_cov", "loss_video", "loss_blind", "frame_diversity"};

inline double& descriptor_field(DescriptorVector& d, std::string_view name) {
    if (name == "m_flow") return d.m_flow;
    if (name == "m_vds") return d.m_vds;
    if (name == "m_tnc") return d.m_tnc;
    if (name == "m_sc") return d.m_sc;
    if (name == "m_ppl") return d.m_ppl;
    if (name == "m_cov") return d.m_cov;
    if (name == "loss_video") return d.loss_video;
    if (name == "loss_blind") return d.loss_blind;
    if (name == "frame_diversity") return d.frame_diversity;
    throw ConfigError("unknown descriptor field '" + std::string(name) + "'");
}

inline double descriptor_field(const DescriptorVector& d, std::string_view name) {
    return descriptor_field(const_cast<DescriptorVector&>(d), name);
}

/// Range checks and the loss-gap / exp-loss identities. Returns (field, message) pairs.
inline std::vector<std::pair<std::string, std::string>> check_descriptors(const DescriptorVector& d) {
    std::vector<std::pair<std::string, std::string>> bad;
    for (auto f : kDescriptorFields)
        if (!std::isfinite(descriptor_field(d, f))) bad.emplace_back(f, "not finite");
    if (!bad.empty()) return bad;
    if (d.m_flow < 0) bad.emplace_back("m_flow", "negative");
    if (d.loss_video < 0) bad.emplace_back("loss_video", "negative");
    if (d.loss_blind < 0) bad.emplace_back("loss_blind", "negative");
    if (d.frame_diversity < 0) bad.emplace_back("frame_diversity", "negative");
    if (d.m_tnc < 0 || d.m_tnc > 1) bad.emplace_back("m_tnc", "outside [0,1]");
    if (d.m_sc < 0 || d.m_sc > 1) bad.emplace_back("m_sc", "outside [0,1]");
    if (d.m_ppl <= 0) bad.emplace_back("m_ppl", "not positive");
    const double gap = d.loss_blind - d.loss_video;
    if (std::abs(d.m_vds - gap) > 1e-12 * std::max(1.0, std::abs(gap)))
        bad.emplace_back("m_vds", "differs from loss_blind - loss_video");
    const double ppl = std::exp(d.loss_video);
    if (std::abs(d.m_ppl - ppl) > 1e-12 * std::max(1.0, ppl))
        bad.emplace_back("m_ppl", "differs from exp(loss_video)");
    return bad;
}

inline json descriptors_to_json(const DescriptorVector& d) {
    json j = json::object();
    for (auto f : kDescriptorFields) j[std::string(f)] = descriptor_field(d, f);
    return j;
}

namespace detail {

struct RowParser {
    std::size_t row;
    std::vector<Diagnostic>& diags;
    bool ok = true;

    void fail(std::string field, std::string msg) {
        diags.push_back({row, std::move(field), std::move(msg)});
        ok = false;
    }

    static bool absent(const json& j, const char* key) {
        auto it = j.find(key);
        return it == j.end() || it->is_null();
    }

    std::optional<std::string> required_string(const json& j, const char* key) {
        if (absent(j, key)) {
            fail(key, "missing");
            return std::nullopt;
        }
        if (!j.at(key).is_string()) {
            fail(key, "expected string");
            return std::nullopt;
        }
        return j.at(key).get<std::string>();
    }

    std::optional<std::string> optional_string(const json& j, const char* key) {
        if (absent(j, key)) return std::nullopt;
        if (!j.at(key).is_string()) {
            fail(key, "expected string");
            return std::nullopt;
        }
        return j.at(key).get<std::string>();
    }

    std::optional<double> optional_number(const json& j, const char* key) {
        if (absent(j, key)) return std::nullopt;
        if (!j.at(key).is_number()) {
            fail(key, "expected number");
            return std::nullopt;
        }
        return j.at(key).get<double>();
    }
};

} // namespace detail

/// Validates one decoded row. Appends diagnostics and returns nullopt on any violation.
inline std::optional<SampleRecord> parse_record(const json& j, std::size_t row, std::vector<Diagnostic>& diags) {
    detail::RowParser p{row, diags};
    if (!j.is_object()) {
        p.fail("<row>", "expected a JSON object");
        return std::nullopt;
    }
    SampleRecord r;
    if (auto id = p.required_string(j, "id")) {
        if (text::trim(*id).empty())
            p.fail("id", "empty");
        else
            r.id = *id;
    }
    if (auto m = p.required_string(j, "modality")) {
        if (auto mod = parse_modality(*m))
            r.modality = *mod;
        else
            p.fail("modality", "expected 'video' or 'image', got '" + *m + "'");
    }
    if (auto s = p.required_string(j, "source")) {
        if (text::trim(*s).empty())
            p.fail("source", "empty");
        else
            r.source = *s;
    }
    for (auto [key, dst] : {std::pair{"question", &r.question}, std::pair{"answer", &r.answer}}) {
        if (auto s = p.required_string(j, key)) {
            if (text::trim(*s).empty())
                p.fail(key, "empty after trimming");
            else
                *dst = *s;
        }
    }
    r.video_id = p.optional_string(j, "video_id");
    r.media = p.optional_string(j, "media");
    r.duration_s = p.optional_number(j, "duration_s");
    if (!detail::RowParser::absent(j, "frame_count")) {
        const auto& fc = j.at("frame_count");
        if (!fc.is_number_integer())
            p.fail("frame_count", "expected integer");
        else
            r.frame_count = fc.get<int>();
    }
    if (!p.ok) return std::nullopt;

    if (r.is_video()) {
        if (!r.video_id || text::trim(*r.video_id).empty()) p.fail("video_id", "required for video");
        if (!r.duration_s)
            p.fail("duration_s", "required for video");
        else if (!(*r.duration_s >= 0) || !std::isfinite(*r.duration_s))
            p.fail("duration_s", "must be a non-negative number");
        if (!r.frame_count)
            p.fail("frame_count", "required for video");
        else if (*r.frame_count < 1)
            p.fail("frame_count", "must be positive");
    } else {
        if (r.video_id) p.fail("video_id", "must be absent for image");
        if (r.duration_s) p.fail("duration_s", "must be absent for image");
        if (r.frame_count) p.fail("frame_count", "must be absent for image");
    }

    if (!detail::RowParser::absent(j, "descriptors")) {
        const auto& dj = j.at("descriptors");
        if (!dj.is_object()) {
            p.fail("descriptors", "expected object");
        } else {
            DescriptorVector d;
            bool complete = true;
            for (auto f : kDescriptorFields) {
                auto it = dj.find(std::string(f));
                if (it == dj.end() || !it->is_number()) {
                    p.fail("descriptors." + std::string(f), "missing or not a number");
                    complete = false;
                } else {
                    descriptor_field(d, f) = it->get<double>();
                }
            }
            if (complete) {
                for (auto& [field, msg] : check_descriptors(d)) p.fail("descriptors." + field, msg);
                r.descriptors = d;
            }
        }
    }
    r.quality_score = p.optional_number(j, "quality_score");
    r.rho = p.optional_number(j, "rho");
    if (!p.ok) return std::nullopt;
    return r;
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

/// TSV row to the JSON shape parse_record expects. Empty cells are absent;
/// descriptor columns are flat and grouped back into "descriptors".
inline json tsv_row_to_json(const std::vector<std::string>& header, const std::vector<std::string>& cells,
                            std::size_t row, std::vector<Diagnostic>& diags, bool& ok) {
    json j = json::object();
    json desc = json::object();
    if (cells.size() != header.size()) {
        diags.push_back({row, "<row>", "expected " + std::to_string(header.size()) + " columns, got " +
                                           std::to_string(cells.size())});
        ok = false;
        return j;
    }
    static const std::set<std::string> numeric{"duration_s", "quality_score", "rho"};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& key = header[c];
        const auto& cell = cells[c];
        if (cell.empty()) continue;
        const bool is_desc =
            std::find(kDescriptorFields.begin(), kDescriptorFields.end(), key) != kDescriptorFields.end();
        if (is_desc || numeric.count(key) || key == "frame_count") {
            try {
                std::size_t used = 0;
                if (key == "frame_count") {
                    const long long v = std::stoll(cell, &used);
                    if (used != cell.size()) throw std::invalid_argument(cell);
                    j[key] = v;
                } else {
                    const double v = std::stod(cell, &used);
                    if (used != cell.size()) throw std::invalid_argument(cell);
                    (is_desc ? desc : j)[key] = v;
                }
            } catch (const std::exception&) {
                diags.push_back({row, key, "not a number: '" + cell + "'"});
                ok = false;
            }
        } else {
            j[key] = cell;
        }
    }
    if (!desc.empty()) j["descriptors"] = desc;
    return j;
}

} // namespace detail

/// Reads a pool file. Malformed rows are dropped and reported in `rejected`;
/// a missing file or a duplicate id throws PoolError.
inline IngestResult ingest_pool(const std::filesystem::path& path, PoolFormat format,
                                const StrataConfig& strata_cfg = {}) {
    std::ifstream in(path);
    if (!in) throw PoolError("cannot open pool file '" + path.string() + "'");

    IngestResult result;
    std::vector<SampleRecord> records;
    std::vector<std::size_t> rows;
    std::vector<std::string> header;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j;
        if (format == PoolFormat::jsonl) {
            j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                result.rejected.push_back({row, "<row>", "invalid JSON"});
                continue;
            }
        } else {
            if (header.empty()) {
                header = detail::split_tabs(line);
                continue;
            }
            bool ok = true;
            j = detail::tsv_row_to_json(header, detail::split_tabs(line), row, result.rejected, ok);
            if (!ok) continue;
        }
        if (auto rec = parse_record(j, row, result.rejected)) {
            records.push_back(std::move(*rec));
            rows.push_back(row);
        }
    }

    std::map<std::string, std::size_t> first_row;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, inserted] = first_row.emplace(records[i].id, rows[i]);
        if (!inserted)
            throw PoolError("duplicate id '" + records[i].id + "' at rows " + std::to_string(it->second) +
                            " and " + std::to_string(rows[i]));
    }
    for (auto& r : records) r.strata = assign_strata(r, strata_cfg);
    result.pool = Pool(std::move(records));
    return result;
}

inline IngestResult ingest_pool(const std::filesystem::path& path) {
    return ingest_pool(path, format_from_path(path));
}

inline json record_to_json(const SampleRecord& r, bool with_strata = false) {
    json j = json::object();
    j["id"] = r.id;
    j["modality"] = std::string(to_string(r.modality));
    j["source"] = r.source;
    if (r.video_id) j["video_id"] = *r.video_id;
    j["question"] = r.question;
    j["answer"] = r.answer;
    if (r.duration_s) j["duration_s"] = *r.duration_s;
    if (r.frame_count) j["frame_count"] = *r.frame_count;
    if (r.media) j["media"] = *r.media;
    if (with_strata) j["strata"] = r.strata.to_string();
    if (r.descriptors) j["descriptors"] = descriptors_to_json(*r.descriptors);
    if (r.quality_score) j["quality_score"] = *r.quality_score;
    if (r.rho) j["rho"] = *r.rho;
    return j;
}

inline void write_pool(const Pool& pool, std::ostream& out, bool with_strata = false) {
    for (const auto& r : pool) out << record_to_json(r, with_strata).dump() << '\n';
}

inline void write_pool(const Pool& pool, const std::filesystem::path& path, bool with_strata = false) {
    std::ofstream out(path);
    if (!out) throw PoolError("cannot write '" + path.string() + "'");
    write_pool(pool, out, with_strata);
}

} // namespace gdo
