#include "simulu/vad.hpp"

#include "simulu/errors.hpp"

#include <algorithm>
#include <cmath>

namespace simulu {

namespace {

// Logistic over RMS: midpoint around -34 dBFS.
constexpr double kLogisticSlope = 200.0;
constexpr double kLogisticMidpoint = 0.02;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Gap {
    std::int64_t begin;
    std::int64_t end;
};

} // namespace

void VadConfig::validate() const {
    if (!(voice_threshold >= 0.0 && voice_threshold <= 1.0)) {
        throw ConfigError("vad: voice threshold must be in [0, 1]");
    }
    if (!(min_segment > 0.0) || min_segment > max_segment) {
        throw ConfigError("vad: need 0 < min_segment <= max_segment");
    }
    if (max_unvoiced < 0.0) {
        throw ConfigError("vad: max_unvoiced must be >= 0");
    }
}

double energy_voicing(std::span<const float> window) {
    if (window.empty()) {
        return 0.0;
    }
    double energy = 0.0;
    for (float x : window) {
        energy += static_cast<double>(x) * static_cast<double>(x);
    }
    const double rms = std::min(1.0, std::sqrt(energy / static_cast<double>(window.size())));
    const double floor = logistic(-kLogisticSlope * kLogisticMidpoint);
    const double score = (logistic(kLogisticSlope * (rms - kLogisticMidpoint)) - floor) / (1.0 - floor);
    return std::clamp(score, 0.0, 1.0);
}

std::vector<Segment> vad_segment(std::span<const float> stream, std::int64_t sample_rate, const VadConfig& cfg,
                                 const VoicingDetector& detector) {
    cfg.validate();
    const auto to_samples = [sample_rate](double s) {
        return static_cast<std::int64_t>(std::llround(s * static_cast<double>(sample_rate)));
    };
    const std::int64_t window = std::max<std::int64_t>(1, to_samples(kVadWindowSeconds));
    const std::int64_t max_segment = to_samples(cfg.max_segment);
    const std::int64_t min_segment = to_samples(cfg.min_segment);
    const std::int64_t max_unvoiced = to_samples(cfg.max_unvoiced);
    const auto length = static_cast<std::int64_t>(stream.size());

    std::vector<Segment> segments;
    bool open = false;
    std::int64_t seg_begin = 0;
    std::int64_t last_voiced_end = 0;
    std::vector<Gap> gaps; // silences inside the open segment

    for (std::int64_t wb = 0; wb < length; wb += window) {
        const std::int64_t we = std::min(wb + window, length);
        const double score = detector(stream.subspan(static_cast<std::size_t>(wb), static_cast<std::size_t>(we - wb)));
        if (score < cfg.voice_threshold) {
            continue;
        }
        if (!open) {
            open = true;
            seg_begin = wb;
            last_voiced_end = we;
            gaps.clear();
            continue;
        }
        if (wb - last_voiced_end > max_unvoiced) {
            segments.push_back({seg_begin, last_voiced_end});
            seg_begin = wb;
            last_voiced_end = we;
            gaps.clear();
            continue;
        }
        if (wb > last_voiced_end) {
            gaps.push_back({last_voiced_end, wb});
        }
        while (we - seg_begin > max_segment) {
            const std::int64_t lo = seg_begin + min_segment;
            const std::int64_t hi = seg_begin + max_segment;
            auto best = gaps.end();
            for (auto g = gaps.begin(); g != gaps.end(); ++g) {
                if (g->end < lo || g->begin > hi) {
                    continue;
                }
                if (best == gaps.end() || g->end - g->begin >= best->end - best->begin) {
                    best = g;
                }
            }
            if (best != gaps.end()) {
                const std::int64_t mid = best->begin + (best->end - best->begin) / 2;
                const std::int64_t cut = std::clamp(mid, std::max(best->begin, lo), std::min(best->end, hi));
                segments.push_back({seg_begin, cut});
                seg_begin = best->end;
                gaps.erase(gaps.begin(), best + 1);
            } else {
                segments.push_back({seg_begin, hi});
                seg_begin = hi;
                gaps.clear();
            }
        }
        last_voiced_end = we;
    }
    if (open) {
        segments.push_back({seg_begin, last_voiced_end});
    }
    return segments;
}

} // namespace simulu
