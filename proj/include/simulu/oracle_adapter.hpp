#pragma once

#include "simulu/adapter.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simulu {

// One source word: its frame span [start_frame, end_frame) and the target
// tokens it translates to, with the number of speech units each token yields.
struct ScriptWord {
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    std::vector<std::string> tokens;
    std::vector<int> units_per_token;
};

struct OracleScript {
    std::vector<ScriptWord> words;
    std::uint64_t noise_seed = 0;
    double attention_sharpness = 1.0;
    double noise_level = 0.0; // amplitude of uniform noise added before row normalization

    // Throws ConfigError on unordered/overlapping spans or empty counts.
    void validate() const;

    std::size_t token_count() const;
    std::vector<std::string> target_tokens() const;
};

// Deterministic synthetic model. Each target token owns an equal share of its
// word's frame span; its speech-text attention row is a Gaussian bump at the
// centre of that share (plus seeded noise). Units are a fixed function of the
// token's stream-global index, so synthesis of any text history is
// reproducible and consistent with synthesis of the full text.
class OracleAdapter final : public ModelAdapter {
public:
    explicit OracleAdapter(OracleScript script, AdapterSpec spec = {});

    AdapterSpec spec() const override { return spec_; }
    TranscribeResult transcribe(const SpeechHistory& speech, const TextHistory& prefix) override;
    SynthesisOutput synthesize(const TextHistory& text) override;

    // Full decode of audio frames [begin_frame, end_frame) with no context:
    // tokens of every word whose span lies inside the window.
    std::vector<std::string> decode_window(std::int64_t begin_frame, std::int64_t end_frame) const;

    // Absolute frame a token's attention peaks at.
    std::int64_t token_center(std::size_t global_token) const { return tokens_.at(global_token).center; }
    std::size_t token_count() const { return tokens_.size(); }
    const OracleScript& script() const { return script_; }

    static std::int32_t unit_id(std::size_t global_token, int k);
    // reduction_rate samples for one unit.
    static void unit_signature(std::int32_t unit, std::int64_t reduction_rate, std::vector<float>& out);

private:
    struct TokenInfo {
        std::string text;
        bool word_start;
        std::size_t word;
        std::int64_t center;
        int units;
    };

    OracleScript script_;
    AdapterSpec spec_;
    std::vector<TokenInfo> tokens_;
};

// Waveform of a script: a quantized tone over every word span, silence
// elsewhere. Values lie on the 16-bit PCM grid so WAV round trips are exact.
std::vector<float> render_script_audio(const OracleScript& script, double duration_s, const AdapterSpec& spec);

} // namespace simulu
