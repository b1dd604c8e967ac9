#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace simulu {

// Rates exposed by a model adapter. Frame rate is the rate of the encoder
// frames that the speech-text attention indexes into.
struct AdapterSpec {
    std::int64_t sample_rate = 16000;
    double frame_rate = 50.0;
    double unit_rate = 50.0;
    std::int64_t reduction_rate = 320; // waveform samples per discrete unit

    // Throws ConfigError unless all fields are positive and
    // reduction_rate * unit_rate == sample_rate.
    void validate() const;

    friend bool operator==(const AdapterSpec&, const AdapterSpec&) = default;
};

// Round-to-nearest; exact whenever frame_rate divides sample_rate.
std::int64_t frames_to_samples(std::int64_t frames, const AdapterSpec& spec);

// Number of complete frames contained in `samples` samples (floor).
std::int64_t samples_to_frames(std::int64_t samples, const AdapterSpec& spec);

std::int64_t seconds_to_samples(double seconds, const AdapterSpec& spec);

struct AudioChunk {
    std::vector<float> samples;
    double duration = 0.0; // seconds

    // Builds a chunk whose duration is derived from the sample count.
    static AudioChunk from_samples(std::vector<float> samples, const AdapterSpec& spec);

    // Throws ConfigError if the length does not match the duration or any
    // amplitude is non-finite.
    void validate(const AdapterSpec& spec) const;
};

// Splits a waveform into consecutive chunks of `segment_size` seconds. The
// last chunk may be shorter.
std::vector<AudioChunk> split_into_chunks(std::span<const float> audio, double segment_size,
                                          const AdapterSpec& spec);

struct PolicyConfig {
    std::int64_t cutoff_frames = 4;
    std::int64_t word_history = 10;
    double segment_size = 0.5;

    void validate() const;

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

// Growable speech buffer whose front can be trimmed at frame granularity.
// Absolute coordinates (since stream start) are canonical; the buffer start is
// at absolute frame discarded_frames().
class SpeechHistory {
public:
    explicit SpeechHistory(AdapterSpec spec = {});

    void append(const AudioChunk& chunk);

    // Drops everything before absolute frame `cut_frame`. Throws
    // std::out_of_range if cut_frame < discarded_frames() or cut_frame > end_frame().
    void trim_front(std::int64_t cut_frame);

    std::span<const float> samples() const { return samples_; }
    std::int64_t size() const { return static_cast<std::int64_t>(samples_.size()); }
    bool empty() const { return samples_.empty(); }

    std::int64_t discarded_frames() const { return discarded_frames_; }
    std::int64_t discarded_samples() const { return discarded_samples_; }

    // Complete frames in the buffer, and the absolute frame just past them.
    std::int64_t buffer_frames() const;
    std::int64_t end_frame() const { return discarded_frames_ + buffer_frames(); }
    std::int64_t end_sample() const { return discarded_samples_ + size(); }

    const AdapterSpec& spec() const { return spec_; }

private:
    AdapterSpec spec_;
    std::vector<float> samples_;
    std::int64_t discarded_frames_ = 0;
    std::int64_t discarded_samples_ = 0;
};

} // namespace simulu
