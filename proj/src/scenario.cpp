#include "simulu/scenario.hpp"

#include "simulu/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace simulu {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(item);
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (in >> item) {
        out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) {
        throw std::invalid_argument("not a number: " + s);
    }
    return v;
}

std::int64_t to_int(const std::string& s) {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) {
        throw std::invalid_argument("not an integer: " + s);
    }
    return v;
}

ScriptWord parse_word(const std::string& rest) {
    ScriptWord w;
    bool has_start = false;
    bool has_end = false;
    for (const std::string& kv : split_ws(rest)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("expected key=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "start_frames") {
            w.start_frame = to_int(value);
            has_start = true;
        } else if (key == "end_frames") {
            w.end_frame = to_int(value);
            has_end = true;
        } else if (key == "tokens") {
            w.tokens = split(value, ',');
        } else if (key == "units") {
            for (const std::string& u : split(value, ',')) {
                w.units_per_token.push_back(static_cast<int>(to_int(u)));
            }
        } else {
            throw std::invalid_argument("unknown word field '" + key + "'");
        }
    }
    if (!has_start || !has_end || w.tokens.empty()) {
        throw std::invalid_argument("word needs start_frames, end_frames and tokens");
    }
    if (w.units_per_token.empty()) {
        w.units_per_token.assign(w.tokens.size(), 1);
    }
    if (w.units_per_token.size() != w.tokens.size()) {
        throw std::invalid_argument(fmt::format("{} unit counts for {} tokens", w.units_per_token.size(),
                                                w.tokens.size()));
    }
    return w;
}

constexpr const char* kVocabulary[] = {
    "il",    "gatto", "sulla", "casa",  "oggi",  "parla", "della",  "nostra", "idea",   "molto",
    "bene",  "questo", "mondo", "tempo", "quando", "dove",  "sempre", "anche",  "perché", "allora",
    "lavoro", "storia", "scienza", "persone", "città", "acqua", "futuro", "grande", "piccolo", "nuovo",
    "voglio", "dire",  "fare",  "vedere", "pensare", "insieme", "ogni",  "prima",  "dopo",   "poi"};

} // namespace

void Scenario::validate(const AdapterSpec& spec) const {
    script.validate();
    if (!(duration_s > 0.0)) {
        throw ConfigError("scenario: duration_s must be positive");
    }
    const double frames = duration_s * spec.frame_rate;
    for (const ScriptWord& w : script.words) {
        if (static_cast<double>(w.end_frame) > frames + 1e-9) {
            throw ConfigError("scenario: word ending at frame " + std::to_string(w.end_frame) +
                              " lies past the stream end");
        }
    }
    for (double d : delays_s) {
        if (!(d >= 0.0)) {
            throw ConfigError("scenario: delays must be non-negative");
        }
    }
}

Scenario parse_scenario(std::istream& in, const AdapterSpec& spec) {
    Scenario sc;
    bool has_reference = false;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) {
            continue;
        }
        try {
            if (line.rfind("word", 0) == 0 && (line.size() == 4 || line[4] == ' ' || line[4] == '\t')) {
                sc.script.words.push_back(parse_word(line.substr(4)));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("expected 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "duration_s") {
                sc.duration_s = to_double(value);
            } else if (key == "noise_seed") {
                sc.script.noise_seed = static_cast<std::uint64_t>(to_int(value));
            } else if (key == "noise_level") {
                sc.script.noise_level = to_double(value);
            } else if (key == "attention_sharpness") {
                sc.script.attention_sharpness = to_double(value);
            } else if (key == "reference") {
                sc.reference = split_ws(value);
                has_reference = true;
            } else if (key == "delays_s") {
                for (const std::string& d : split_ws(value)) {
                    sc.delays_s.push_back(to_double(d));
                }
            } else {
                throw std::invalid_argument("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(fmt::format("scenario line {}: {}", lineno, e.what()));
        } catch (const std::out_of_range& e) {
            throw ConfigError(fmt::format("scenario line {}: value out of range", lineno));
        }
    }
    if (!has_reference) {
        sc.reference = sc.script.target_tokens();
    }
    sc.validate(spec);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const AdapterSpec& spec) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open scenario " + path.string());
    }
    return parse_scenario(in, spec);
}

void write_scenario(std::ostream& out, const Scenario& sc) {
    out << "duration_s = " << fmt::format("{}", sc.duration_s) << '\n';
    out << "noise_seed = " << sc.script.noise_seed << '\n';
    out << "noise_level = " << fmt::format("{}", sc.script.noise_level) << '\n';
    out << "attention_sharpness = " << fmt::format("{}", sc.script.attention_sharpness) << '\n';
    if (!sc.delays_s.empty()) {
        out << "delays_s =";
        for (double d : sc.delays_s) {
            out << ' ' << fmt::format("{}", d);
        }
        out << '\n';
    }
    if (sc.reference != sc.script.target_tokens()) {
        out << "reference =";
        for (const std::string& t : sc.reference) {
            out << ' ' << t;
        }
        out << '\n';
    }
    for (const ScriptWord& w : sc.script.words) {
        out << "word start_frames=" << w.start_frame << " end_frames=" << w.end_frame << " tokens=";
        for (std::size_t i = 0; i < w.tokens.size(); ++i) {
            out << (i ? "," : "") << w.tokens[i];
        }
        out << " units=";
        for (std::size_t i = 0; i < w.units_per_token.size(); ++i) {
            out << (i ? "," : "") << w.units_per_token[i];
        }
        out << '\n';
    }
}

Scenario generate_scenario(std::uint64_t seed, const ScenarioGenOptions& options, const AdapterSpec& spec) {
    std::mt19937_64 rng(seed);
    auto uniform_int = [&rng](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Scenario sc;
    const double span = options.max_duration_s - options.min_duration_s;
    sc.duration_s = std::round((options.min_duration_s + span * unit(rng)) * 10.0) / 10.0;
    sc.script.noise_seed = seed;
    sc.script.noise_level = options.noise_level;
    sc.script.attention_sharpness = options.attention_sharpness;

    const auto total_frames = static_cast<std::int64_t>(std::floor(sc.duration_s * spec.frame_rate));
    const std::int64_t tail = static_cast<std::int64_t>(spec.frame_rate * 0.2);
    std::int64_t t = uniform_int(5, 40);
    constexpr auto vocab = std::size(kVocabulary);
    while (true) {
        const std::int64_t len = uniform_int(10, 30);
        if (t + len > total_frames - tail) {
            break;
        }
        ScriptWord w;
        w.start_frame = t;
        w.end_frame = t + len;
        const auto n_tokens = uniform_int(1, 3);
        for (std::int64_t k = 0; k < n_tokens; ++k) {
            std::string tok = kVocabulary[static_cast<std::size_t>(uniform_int(0, vocab - 1))];
            if (k > 0) {
                tok = "@" + tok; // word-internal piece
            }
            w.tokens.push_back(std::move(tok));
            w.units_per_token.push_back(static_cast<int>(uniform_int(2, 6)));
        }
        sc.script.words.push_back(std::move(w));

        const double r = unit(rng);
        std::int64_t gap = 0;
        if (r < 0.8) {
            gap = uniform_int(2, 12);
        } else if (r < 0.95) {
            gap = uniform_int(15, 40);
        } else {
            gap = uniform_int(50, 100);
        }
        t += len + gap;
    }
    sc.reference = sc.script.target_tokens();
    sc.validate(spec);
    return sc;
}

} // namespace simulu
