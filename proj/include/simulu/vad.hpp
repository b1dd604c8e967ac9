#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace simulu {

struct VadConfig {
    double voice_threshold = 0.1;
    double max_unvoiced = 20.0; // longest silence kept inside one segment, seconds
    double min_segment = 15.0;
    double max_segment = 30.0;

    void validate() const;
};

// Half-open sample range [begin, end).
struct Segment {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

// Voicing score in [0, 1] for one analysis window.
using VoicingDetector = std::function<double(std::span<const float>)>;

inline constexpr double kVadWindowSeconds = 0.03;

// Normalized RMS through a logistic rescaled so that silence maps to exactly 0.
double energy_voicing(std::span<const float> window);

// Splits a long stream into segments for models that need bounded input.
// Boundaries fall in unvoiced regions; a segment closes once the silence inside
// it would exceed max_unvoiced, and a segment about to exceed max_segment is
// split inside its longest gap after min_segment, or hard-split at exactly
// max_segment when there is none.
std::vector<Segment> vad_segment(std::span<const float> stream, std::int64_t sample_rate, const VadConfig& cfg,
                                 const VoicingDetector& detector = energy_voicing);

} // namespace simulu
