#include "simulu/timeline.hpp"

#include "simulu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace simulu {

void AdapterSpec::validate() const {
    if (sample_rate <= 0 || !(frame_rate > 0.0) || !(unit_rate > 0.0) || reduction_rate <= 0) {
        throw ConfigError("adapter spec: all rates must be strictly positive");
    }
    if (std::abs(static_cast<double>(reduction_rate) * unit_rate - static_cast<double>(sample_rate)) > 1e-9) {
        throw ConfigError("adapter spec: reduction_rate * unit_rate must equal sample_rate");
    }
}

std::int64_t frames_to_samples(std::int64_t frames, const AdapterSpec& spec) {
    return std::llround(static_cast<double>(frames) * static_cast<double>(spec.sample_rate) / spec.frame_rate);
}

std::int64_t samples_to_frames(std::int64_t samples, const AdapterSpec& spec) {
    // Small epsilon so that exact multiples are not lost to rounding.
    return static_cast<std::int64_t>(
        std::floor(static_cast<double>(samples) * spec.frame_rate / static_cast<double>(spec.sample_rate) + 1e-9));
}

std::int64_t seconds_to_samples(double seconds, const AdapterSpec& spec) {
    return std::llround(seconds * static_cast<double>(spec.sample_rate));
}

AudioChunk AudioChunk::from_samples(std::vector<float> samples, const AdapterSpec& spec) {
    AudioChunk chunk;
    chunk.duration = static_cast<double>(samples.size()) / static_cast<double>(spec.sample_rate);
    chunk.samples = std::move(samples);
    return chunk;
}

void AudioChunk::validate(const AdapterSpec& spec) const {
    if (!(duration > 0.0) && !samples.empty()) {
        throw ConfigError("audio chunk: duration must be positive");
    }
    if (static_cast<std::int64_t>(samples.size()) != seconds_to_samples(duration, spec)) {
        throw ConfigError("audio chunk: length " + std::to_string(samples.size()) +
                          " does not match duration " + std::to_string(duration) + " s");
    }
    if (!std::all_of(samples.begin(), samples.end(), [](float x) { return std::isfinite(x); })) {
        throw ConfigError("audio chunk: non-finite amplitude");
    }
}

std::vector<AudioChunk> split_into_chunks(std::span<const float> audio, double segment_size,
                                          const AdapterSpec& spec) {
    if (!(segment_size > 0.0)) {
        throw ConfigError("segment size must be positive");
    }
    const auto step = static_cast<std::size_t>(seconds_to_samples(segment_size, spec));
    if (step == 0) {
        throw ConfigError("segment size shorter than one sample");
    }
    std::vector<AudioChunk> chunks;
    for (std::size_t pos = 0; pos < audio.size(); pos += step) {
        const std::size_t n = std::min(step, audio.size() - pos);
        AudioChunk chunk;
        chunk.samples.assign(audio.begin() + static_cast<std::ptrdiff_t>(pos),
                             audio.begin() + static_cast<std::ptrdiff_t>(pos + n));
        chunk.duration = n == step ? segment_size : static_cast<double>(n) / static_cast<double>(spec.sample_rate);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

void PolicyConfig::validate() const {
    if (cutoff_frames < 0) {
        throw ConfigError("cutoff_frames must be >= 0");
    }
    if (word_history < 1) {
        throw ConfigError("word_history must be >= 1");
    }
    if (!(segment_size > 0.0)) {
        throw ConfigError("segment_size must be > 0");
    }
}

SpeechHistory::SpeechHistory(AdapterSpec spec) : spec_(spec) { spec_.validate(); }

void SpeechHistory::append(const AudioChunk& chunk) {
    samples_.insert(samples_.end(), chunk.samples.begin(), chunk.samples.end());
}

std::int64_t SpeechHistory::buffer_frames() const {
    // Frames are counted on the absolute timeline so that trimming never
    // changes which absolute frame the buffer ends at.
    return samples_to_frames(end_sample(), spec_) - discarded_frames_;
}

void SpeechHistory::trim_front(std::int64_t cut_frame) {
    if (cut_frame < discarded_frames_ || cut_frame > end_frame()) {
        throw std::out_of_range("trim_front: cut frame " + std::to_string(cut_frame) + " outside [" +
                                std::to_string(discarded_frames_) + ", " + std::to_string(end_frame()) + "]");
    }
    const std::int64_t cut_sample = frames_to_samples(cut_frame, spec_);
    const std::int64_t drop = std::clamp<std::int64_t>(cut_sample - discarded_samples_, 0, size());
    samples_.erase(samples_.begin(), samples_.begin() + drop);
    discarded_frames_ = cut_frame;
    discarded_samples_ = cut_sample;
}

} // namespace simulu
