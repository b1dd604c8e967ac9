#pragma once

#include "simulu/alignment.hpp"
#include "simulu/text_history.hpp"
#include "simulu/timeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simulu {

// Speech-to-text output for the current speech history. Attention rows are
// the new tokens; columns are the frames of the current buffer (column 0 is
// absolute frame speech.discarded_frames()).
struct TranscribeResult {
    std::vector<std::string> new_tokens;
    std::vector<bool> word_start_flags;
    Attention speech_text_attention;
};

// Text-to-unit + vocoder output for a whole text history. Attention rows are
// units, columns are tokens of the synthesized history.
struct SynthesisOutput {
    std::vector<std::int32_t> units;
    Attention text_unit_attention;
    std::vector<float> waveform; // units.size() * reduction_rate samples
};

// The two model calls the policies need. An adapter serves exactly one
// session at a time.
class ModelAdapter {
public:
    virtual ~ModelAdapter() = default;

    virtual AdapterSpec spec() const = 0;

    // `prefix` is the retained committed history, passed as decoder context.
    // Returns only tokens past the prefix.
    virtual TranscribeResult transcribe(const SpeechHistory& speech, const TextHistory& prefix) = 0;

    virtual SynthesisOutput synthesize(const TextHistory& text) = 0;
};

} // namespace simulu
