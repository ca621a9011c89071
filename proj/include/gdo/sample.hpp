#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gdo/error.hpp"

namespace gdo {

enum class Modality { video, image };

enum class DurationBucket { na, short_clip, medium_clip, long_clip };
enum class TemporalBucket { temporal_negative, temporal_positive };
enum class QuestionForm { what_where_who, count, when_order, why_how, other };
enum class LengthBucket { short_text, medium_text, long_text };
enum class SourceType { general_qa, captioning, reasoning, ocr_document, other };

inline std::string_view to_string(Modality m) { return m == Modality::video ? "video" : "image"; }

inline std::optional<Modality> parse_modality(std::string_view s) {
    if (s == "video") return Modality::video;
    if (s == "image") return Modality::image;
    return std::nullopt;
}

inline std::string_view to_string(DurationBucket b) {
    switch (b) {
    case DurationBucket::na: return "na";
    case DurationBucket::short_clip: return "short";
    case DurationBucket::medium_clip: return "medium";
    case DurationBucket::long_clip: return "long";
    }
    return "?";
}

inline std::string_view to_string(TemporalBucket b) {
    return b == TemporalBucket::temporal_positive ? "temporal_positive" : "temporal_negative";
}

inline std::string_view to_string(QuestionForm f) {
    switch (f) {
    case QuestionForm::what_where_who: return "what_where_who";
    case QuestionForm::count: return "count";
    case QuestionForm::when_order: return "when_order";
    case QuestionForm::why_how: return "why_how";
    case QuestionForm::other: return "other";
    }
    return "?";
}

inline std::string_view to_string(LengthBucket b) {
    switch (b) {
    case LengthBucket::short_text: return "le8";
    case LengthBucket::medium_text: return "9to24";
    case LengthBucket::long_text: return "gt24";
    }
    return "?";
}

inline std::string_view to_string(SourceType t) {
    switch (t) {
    case SourceType::general_qa: return "general_qa";
    case SourceType::captioning: return "captioning";
    case SourceType::reasoning: return "reasoning";
    case SourceType::ocr_document: return "ocr_document";
    case SourceType::other: return "other";
    }
    return "?";
}

struct StratumKey {
    DurationBucket duration_bucket = DurationBucket::na;
    TemporalBucket temporal_bucket = TemporalBucket::temporal_negative;
    QuestionForm question_form = QuestionForm::other;
    LengthBucket qlen_bucket = LengthBucket::short_text;
    LengthBucket alen_bucket = LengthBucket::short_text;
    SourceType source_type = SourceType::other;

    auto operator<=>(const StratumKey&) const = default;

    std::string to_string() const {
        std::string s;
        for (auto part : {gdo::to_string(duration_bucket), gdo::to_string(temporal_bucket),
                          gdo::to_string(question_form), gdo::to_string(qlen_bucket),
                          gdo::to_string(alen_bucket), gdo::to_string(source_type)}) {
            if (!s.empty()) s += '|';
            s += part;
        }
        return s;
    }
};

/// The six per-sample descriptors plus the raw probe quantities they derive from.
struct DescriptorVector {
    double m_flow = 0.0;
    double m_vds = 0.0;
    double m_tnc = 0.0;
    double m_sc = 0.0;
    double m_ppl = 1.0;
    double m_cov = 0.0;
    double loss_video = 0.0;
    double loss_blind = 0.0;
    double frame_diversity = 0.0;

    bool operator==(const DescriptorVector&) const = default;
};

struct SampleRecord {
    std::string id;
    Modality modality = Modality::image;
    std::string source;
    std::optional<std::string> video_id;
    std::string question;
    std::string answer;
    std::optional<double> duration_s;
    std::optional<int> frame_count;
    // Image id or synthetic frame file; not decoded except for *.frames.json fixtures.
    std::optional<std::string> media;
    StratumKey strata;
    std::optional<DescriptorVector> descriptors;
    std::optional<double> quality_score;
    std::optional<double> rho;

    bool is_video() const noexcept { return modality == Modality::video; }

    /// Clip id for videos, media ref (or own id) for images.
    const std::string& visual_ref() const noexcept {
        if (video_id) return *video_id;
        if (media) return *media;
        return id;
    }
};

/// Ordered collection of records with unique ids.
class Pool {
public:
    Pool() = default;
    explicit Pool(std::vector<SampleRecord> records) : records_(std::move(records)) { reindex(); }

    const std::vector<SampleRecord>& records() const noexcept { return records_; }
    std::vector<SampleRecord>& mutable_records() noexcept { return records_; }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const SampleRecord& operator[](std::size_t i) const { return records_[i]; }
    SampleRecord& operator[](std::size_t i) { return records_[i]; }

    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }

    std::optional<std::size_t> find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Rebuild the id index; throws PoolError on a duplicate id.
    void reindex() {
        index_.clear();
        index_.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            auto [it, inserted] = index_.emplace(records_[i].id, i);
            if (!inserted)
                throw PoolError("duplicate id '" + records_[i].id + "' at positions " +
                                std::to_string(it->second) + " and " + std::to_string(i));
        }
    }

private:
    std::vector<SampleRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace gdo
