#include "simulu/oracle_adapter.hpp"

#include "simulu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace simulu {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform [0, 1) keyed on (seed, token, absolute frame) so the noise of a cell
// does not depend on how the buffer happens to be trimmed.
double cell_noise(std::uint64_t seed, std::size_t token, std::int64_t frame) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(token));
    h = splitmix64(h ^ static_cast<std::uint64_t>(frame));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

float quantize_pcm16(double v) { return static_cast<float>(std::round(v * 32768.0) / 32768.0); }

void normalize_rows(Attention& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m.row(r) /= m.row(r).sum();
    }
}

} // namespace

void OracleScript::validate() const {
    std::int64_t prev_end = 0;
    for (const ScriptWord& w : words) {
        if (w.start_frame < prev_end || w.end_frame <= w.start_frame) {
            throw ConfigError("oracle script: word spans must be ordered, non-empty and non-overlapping");
        }
        if (w.tokens.empty() || w.tokens.size() != w.units_per_token.size()) {
            throw ConfigError("oracle script: every word needs tokens and one unit count per token");
        }
        if (std::any_of(w.units_per_token.begin(), w.units_per_token.end(), [](int u) { return u <= 0; })) {
            throw ConfigError("oracle script: unit counts must be positive");
        }
        if (static_cast<std::int64_t>(w.tokens.size()) > w.end_frame - w.start_frame) {
            throw ConfigError("oracle script: word span shorter than its token count");
        }
        prev_end = w.end_frame;
    }
    if (!(attention_sharpness > 0.0) || noise_level < 0.0) {
        throw ConfigError("oracle script: sharpness must be positive and noise non-negative");
    }
}

std::size_t OracleScript::token_count() const {
    std::size_t n = 0;
    for (const ScriptWord& w : words) {
        n += w.tokens.size();
    }
    return n;
}

std::vector<std::string> OracleScript::target_tokens() const {
    std::vector<std::string> out;
    for (const ScriptWord& w : words) {
        out.insert(out.end(), w.tokens.begin(), w.tokens.end());
    }
    return out;
}

OracleAdapter::OracleAdapter(OracleScript script, AdapterSpec spec) : script_(std::move(script)), spec_(spec) {
    script_.validate();
    spec_.validate();
    for (std::size_t wi = 0; wi < script_.words.size(); ++wi) {
        const ScriptWord& w = script_.words[wi];
        const auto n = static_cast<std::int64_t>(w.tokens.size());
        const std::int64_t len = w.end_frame - w.start_frame;
        for (std::int64_t k = 0; k < n; ++k) {
            const std::int64_t a = w.start_frame + k * len / n;
            const std::int64_t b = w.start_frame + (k + 1) * len / n;
            tokens_.push_back({w.tokens[static_cast<std::size_t>(k)], k == 0, wi, a + (b - a - 1) / 2,
                               w.units_per_token[static_cast<std::size_t>(k)]});
        }
    }
}

TranscribeResult OracleAdapter::transcribe(const SpeechHistory& speech, const TextHistory& prefix) {
    TranscribeResult out;
    const std::size_t first = prefix.dropped_tokens() + prefix.size();
    const std::int64_t begin = speech.discarded_frames();
    const std::int64_t end = speech.end_frame();
    const std::int64_t cols = end - begin;
    if (cols <= 0) {
        return out;
    }

    std::size_t last = first;
    while (last < tokens_.size() && script_.words[tokens_[last].word].end_frame <= end) {
        ++last;
    }
    const auto rows = static_cast<Eigen::Index>(last - first);
    out.speech_text_attention.resize(rows, cols);

    const double sigma = 10.0 / script_.attention_sharpness;
    for (std::size_t g = first; g < last; ++g) {
        const TokenInfo& t = tokens_[g];
        out.new_tokens.push_back(t.text);
        out.word_start_flags.push_back(t.word_start);
        const auto r = static_cast<Eigen::Index>(g - first);
        // Tokens whose frames were already trimmed peak at the buffer start.
        const std::int64_t center = std::clamp(t.center - begin, std::int64_t{0}, cols - 1);
        for (std::int64_t c = 0; c < cols; ++c) {
            const double d = static_cast<double>(c - center) / sigma;
            double v = std::exp(-0.5 * d * d);
            if (script_.noise_level > 0.0) {
                v += script_.noise_level * cell_noise(script_.noise_seed, g, c + begin);
            }
            out.speech_text_attention(r, c) = v;
        }
    }
    normalize_rows(out.speech_text_attention);
    return out;
}

SynthesisOutput OracleAdapter::synthesize(const TextHistory& text) {
    if (text.empty()) {
        throw AdapterError("oracle synthesize: empty text history");
    }
    const std::size_t first = text.dropped_tokens();
    if (first + text.size() > tokens_.size()) {
        throw AdapterError("oracle synthesize: text history extends past the script");
    }
    SynthesisOutput out;
    std::vector<std::int64_t> owner;
    for (std::size_t i = 0; i < text.size(); ++i) {
        for (int k = 0; k < tokens_[first + i].units; ++k) {
            out.units.push_back(unit_id(first + i, k));
            owner.push_back(static_cast<std::int64_t>(i));
        }
    }
    const auto units = static_cast<Eigen::Index>(out.units.size());
    const auto cols = static_cast<Eigen::Index>(text.size());
    out.text_unit_attention.resize(units, cols);
    for (Eigen::Index u = 0; u < units; ++u) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double d = static_cast<double>(c - owner[static_cast<std::size_t>(u)]);
            out.text_unit_attention(u, c) = std::exp(-2.0 * d * d);
        }
    }
    normalize_rows(out.text_unit_attention);

    out.waveform.reserve(out.units.size() * static_cast<std::size_t>(spec_.reduction_rate));
    for (std::int32_t unit : out.units) {
        unit_signature(unit, spec_.reduction_rate, out.waveform);
    }
    return out;
}

std::vector<std::string> OracleAdapter::decode_window(std::int64_t begin_frame, std::int64_t end_frame) const {
    std::vector<std::string> out;
    for (const TokenInfo& t : tokens_) {
        const ScriptWord& w = script_.words[t.word];
        if (w.start_frame >= begin_frame && w.end_frame <= end_frame) {
            out.push_back(t.text);
        }
    }
    return out;
}

std::int32_t OracleAdapter::unit_id(std::size_t global_token, int k) {
    return static_cast<std::int32_t>((global_token * 131 + static_cast<std::size_t>(k) * 17 + 7) % 1000);
}

void OracleAdapter::unit_signature(std::int32_t unit, std::int64_t reduction_rate, std::vector<float>& out) {
    const double cycles = 1.0 + static_cast<double>(unit % 40);
    const double amp = 0.1 + 0.002 * static_cast<double>(unit % 100);
    for (std::int64_t n = 0; n < reduction_rate; ++n) {
        const double phase = 2.0 * std::numbers::pi * cycles * static_cast<double>(n) / static_cast<double>(reduction_rate);
        out.push_back(quantize_pcm16(amp * std::sin(phase)));
    }
}

std::vector<float> render_script_audio(const OracleScript& script, double duration_s, const AdapterSpec& spec) {
    std::vector<float> audio(static_cast<std::size_t>(seconds_to_samples(duration_s, spec)), 0.0f);
    const auto sr = static_cast<double>(spec.sample_rate);
    for (std::size_t wi = 0; wi < script.words.size(); ++wi) {
        const ScriptWord& w = script.words[wi];
        const double freq = 140.0 + 25.0 * static_cast<double>(wi % 12);
        const auto a = static_cast<std::size_t>(std::min<std::int64_t>(frames_to_samples(w.start_frame, spec),
                                                                        static_cast<std::int64_t>(audio.size())));
        const auto b = static_cast<std::size_t>(std::min<std::int64_t>(frames_to_samples(w.end_frame, spec),
                                                                        static_cast<std::int64_t>(audio.size())));
        for (std::size_t n = a; n < b; ++n) {
            audio[n] = quantize_pcm16(0.3 * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(n - a) / sr));
        }
    }
    return audio;
}

} // namespace simulu
