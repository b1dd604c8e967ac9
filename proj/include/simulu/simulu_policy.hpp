#pragma once

#include "simulu/adapter.hpp"
#include "simulu/text_history.hpp"
#include "simulu/timeline.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace simulu {

struct Emission {
    std::vector<std::string> new_tokens;
    std::vector<float> waveform; // multiple of reduction_rate samples
    double source_consumed_at_emit = 0.0;
};

// What the last step decided; useful for logs and tests.
struct StepDecision {
    std::size_t hypothesis_tokens = 0;
    std::size_t committed_tokens = 0;
    std::size_t discarded_tokens = 0; // removed from the text history by trim
    std::int64_t cut_frame = -1;      // absolute frame the speech history was cut at, -1 if untouched
    std::size_t synthesized_units = 0;
    std::size_t discarded_units = 0;
};

// One long-form stream driven by the attention-guided simultaneous policy:
// ingest audio, transcribe the speech history, commit the stable prefix,
// bound both histories to the last WH words, re-synthesize the retained
// text and emit only the speech of the newly committed tokens.
class StreamSession {
public:
    // Throws ConfigError if the config or adapter spec is invalid.
    StreamSession(PolicyConfig config, ModelAdapter& adapter);

    // Throws StateError after finish().
    void push_audio(const AudioChunk& chunk);

    // One read/write decision over the current histories. Returns nothing when
    // no new token is stable yet. Throws StateError before the first chunk or
    // after finish(); ContractViolation if the adapter output is malformed.
    std::optional<Emission> step();

    // Applies the word-history bound. Returns the number of tokens discarded.
    std::size_t trim();

    // Final step with every frame considered stable. Throws StateError on a
    // second call.
    std::optional<Emission> finish();

    const PolicyConfig& config() const { return config_; }
    const AdapterSpec& spec() const { return spec_; }
    const SpeechHistory& speech() const { return speech_; }
    const TextHistory& text() const { return text_; }
    std::int64_t emitted_units_total() const { return emitted_units_total_; }
    double source_consumed() const { return source_consumed_; }
    std::size_t chunks_ingested() const { return chunks_ingested_; }
    bool finished() const { return finished_; }
    const StepDecision& last_decision() const { return last_; }

private:
    std::optional<Emission> run_step(std::int64_t cutoff);

    PolicyConfig config_;
    ModelAdapter* adapter_;
    AdapterSpec spec_;
    SpeechHistory speech_;
    TextHistory text_;
    std::int64_t emitted_units_total_ = 0;
    double source_consumed_ = 0.0;
    std::size_t chunks_ingested_ = 0;
    bool finished_ = false;
    StepDecision last_;
};

} // namespace simulu
