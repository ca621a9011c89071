#pragma once

#include <array>
#include <string_view>
#include <utility>

#include "gdo/sample.hpp"
#include "gdo/text.hpp"

namespace gdo {

struct StrataConfig {
    double temporal_threshold = 0.5;  // m_tnc at or above this is temporal-positive
    double short_max_s = 30.0;
    double medium_max_s = 120.0;
};

inline DurationBucket duration_bucket(const SampleRecord& r, const StrataConfig& cfg = {}) {
    if (!r.is_video() || !r.duration_s) return DurationBucket::na;
    if (*r.duration_s <= cfg.short_max_s) return DurationBucket::short_clip;
    if (*r.duration_s <= cfg.medium_max_s) return DurationBucket::medium_clip;
    return DurationBucket::long_clip;
}

inline LengthBucket length_bucket(std::string_view s) {
    const auto n = text::token_count(s);
    if (n <= 8) return LengthBucket::short_text;
    if (n <= 24) return LengthBucket::medium_text;
    return LengthBucket::long_text;
}

/// Class of the first interrogative token in the question.
inline QuestionForm question_form(std::string_view question) {
    const auto toks = text::tokens(question);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (t == "how") {
            if (i + 1 < toks.size() && (toks[i + 1] == "many" || toks[i + 1] == "much"))
                return QuestionForm::count;
            return QuestionForm::why_how;
        }
        if (t == "count") return QuestionForm::count;
        if (t == "what" || t == "where" || t == "who" || t == "which" || t == "whose" || t == "whom")
            return QuestionForm::what_where_who;
        if (t == "when" || t == "order") return QuestionForm::when_order;
        if (t == "why") return QuestionForm::why_how;
    }
    return QuestionForm::other;
}

/// Keyword table over the source tag; first matching row wins.
inline constexpr std::array<std::pair<std::string_view, SourceType>, 12> kSourceTypeRules{{
    {"caption", SourceType::captioning},
    {"cap", SourceType::captioning},
    {"ocr", SourceType::ocr_document},
    {"doc", SourceType::ocr_document},
    {"chart", SourceType::ocr_document},
    {"text", SourceType::ocr_document},
    {"reason", SourceType::reasoning},
    {"math", SourceType::reasoning},
    {"science", SourceType::reasoning},
    {"qa", SourceType::general_qa},
    {"question", SourceType::general_qa},
    {"instruct", SourceType::general_qa},
}};

inline SourceType source_type(std::string_view source) {
    const auto words = text::alnum_words(source);
    for (const auto& [needle, type] : kSourceTypeRules)
        for (const auto& w : words)
            if (w.find(needle) != std::string::npos) return type;
    return SourceType::other;
}

inline bool is_temporal_positive(const SampleRecord& r, const StrataConfig& cfg = {}) {
    return r.is_video() && r.descriptors && r.descriptors->m_tnc >= cfg.temporal_threshold;
}

inline StratumKey assign_strata(const SampleRecord& r, const StrataConfig& cfg = {}) {
    StratumKey k;
    k.duration_bucket = duration_bucket(r, cfg);
    k.temporal_bucket = is_temporal_positive(r, cfg) ? TemporalBucket::temporal_positive
                                                     : TemporalBucket::temporal_negative;
    k.question_form = question_form(r.question);
    k.qlen_bucket = length_bucket(r.question);
    k.alen_bucket = length_bucket(r.answer);
    k.source_type = source_type(r.source);
    return k;
}

inline void assign_strata(Pool& pool, const StrataConfig& cfg = {}) {
    for (auto& r : pool.mutable_records()) r.strata = assign_strata(r, cfg);
}

} // namespace gdo
