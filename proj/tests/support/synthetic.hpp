#pragma once

// Synthetic pools for tests. Descriptors are drawn directly (no probe) so
// large pools are cheap; the loss identities hold exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gdo/gdo.hpp"

namespace gdo::testing {

struct SyntheticSpec {
    std::size_t videos = 100;
    std::size_t images = 100;
    double temporal_share = 0.3;  // among videos
    double vds_positive_share = 0.6;
    int qa_per_clip = 2;
    std::vector<std::string> video_sources{"video_qa_general", "video_caption", "video_reasoning"};
    std::vector<std::string> image_sources{"image_qa_general", "image_ocr_doc", "image_caption", "image_reasoning"};
    std::uint64_t seed = 1;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline DescriptorVector random_descriptors(std::mt19937_64& rng, bool video, bool temporal, bool vds_positive) {
    DescriptorVector d;
    d.loss_video = uniform(rng, 0.2, 3.0);
    const double gap = vds_positive ? uniform(rng, 0.01, 1.2) : -uniform(rng, 0.0, std::min(0.4, d.loss_video));
    d.loss_blind = d.loss_video + gap;
    d.m_vds = d.loss_blind - d.loss_video;
    d.m_ppl = std::exp(d.loss_video);
    d.m_sc = uniform(rng, 0.2, 1.0);
    d.m_cov = uniform(rng, 0.1, 0.9);
    if (video) {
        d.m_flow = uniform(rng, 0.0, 3.0);
        d.frame_diversity = uniform(rng, 0.0, 10.0);
        d.m_tnc = temporal ? uniform(rng, 0.5, 1.0) : uniform(rng, 0.0, 0.49);
    }
    return d;
}

/// Pool with descriptors attached and strata assigned; file order is
/// videos then images.
inline Pool synthetic_pool(const SyntheticSpec& spec) {
    static const char* kTemporalQ[] = {"what happens after", "in what order do", "how long does", "when does"};
    static const char* kPlainQ[] = {"what color is", "how many", "where is", "who is", "why is", "describe"};
    std::mt19937_64 rng(spec.seed);
    std::vector<SampleRecord> recs;
    recs.reserve(spec.videos + spec.images);
    for (std::size_t i = 0; i < spec.videos; ++i) {
        SampleRecord r;
        r.id = "v" + std::to_string(i);
        r.modality = Modality::video;
        r.source = spec.video_sources[rng() % spec.video_sources.size()];
        r.video_id = "c" + std::to_string(i / static_cast<std::size_t>(std::max(1, spec.qa_per_clip)));
        const bool temporal = uniform(rng, 0, 1) < spec.temporal_share;
        r.question = std::string(temporal ? kTemporalQ[rng() % 4] : kPlainQ[rng() % 6]) + " item " + std::to_string(i);
        r.answer = "answer " + std::to_string(rng() % 1000) + (rng() % 2 ? " with a longer explanation" : "");
        r.duration_s = uniform(rng, 2.0, 400.0);
        r.frame_count = 8 + static_cast<int>(rng() % 56);
        r.descriptors = random_descriptors(rng, true, temporal, uniform(rng, 0, 1) < spec.vds_positive_share);
        recs.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < spec.images; ++i) {
        SampleRecord r;
        r.id = "i" + std::to_string(i);
        r.modality = Modality::image;
        r.source = spec.image_sources[rng() % spec.image_sources.size()];
        r.question = std::string(kPlainQ[rng() % 6]) + " object " + std::to_string(i);
        r.answer = "answer " + std::to_string(rng() % 1000);
        r.descriptors = random_descriptors(rng, false, false, uniform(rng, 0, 1) < spec.vds_positive_share);
        recs.push_back(std::move(r));
    }
    Pool pool(std::move(recs));
    assign_strata(pool);
    return pool;
}

inline Pool scored_synthetic_pool(const SyntheticSpec& spec, unsigned workers = 1) {
    return score_pool(synthetic_pool(spec), Ablation{}, workers).pool;
}

/// Hand-built record for small fixtures.
inline SampleRecord make_record(std::string id, Modality m, double rho, double m_tnc = 0.0, double m_vds = 0.1,
                                std::string source = "src", std::string question = "") {
    SampleRecord r;
    r.id = std::move(id);
    r.modality = m;
    r.source = std::move(source);
    r.question = question.empty() ? "what is item " + r.id : std::move(question);
    r.answer = "answer for " + r.id;
    if (m == Modality::video) {
        r.video_id = "clip_" + r.id;
        r.duration_s = 10.0;
        r.frame_count = 8;
    }
    DescriptorVector d;
    d.loss_video = 1.0;
    d.loss_blind = 1.0 + m_vds;
    d.m_vds = d.loss_blind - d.loss_video;
    d.m_ppl = std::exp(d.loss_video);
    d.m_tnc = m == Modality::video ? m_tnc : 0.0;
    d.m_sc = 0.5;
    r.descriptors = d;
    r.rho = rho;
    r.strata = assign_strata(r);
    return r;
}

inline std::string manifest_bytes(const SubsetManifest& m) {
    std::ostringstream os;
    write_manifest(m, os);
    return os.str();
}

} // namespace gdo::testing
