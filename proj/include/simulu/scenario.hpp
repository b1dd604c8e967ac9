#pragma once

#include "simulu/oracle_adapter.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace simulu {

// A scripted stream for the oracle adapter. Text format, one entry per line:
//
//   duration_s = 12.5
//   noise_seed = 7
//   noise_level = 0.05
//   attention_sharpness = 2
//   delays_s = 0.01 0.02          (optional, injected compute delay per step)
//   reference = il gatto ...      (optional, defaults to the scripted tokens)
//   word start_frames=10 end_frames=42 tokens=il,gatto units=3,4
//
// '#' starts a comment.
struct Scenario {
    OracleScript script;
    double duration_s = 0.0;
    std::vector<std::string> reference;
    std::vector<double> delays_s;

    // Throws ConfigError when a word ends past the stream.
    void validate(const AdapterSpec& spec = {}) const;
};

// Throws ConfigError("scenario line N: ...") on malformed input.
Scenario parse_scenario(std::istream& in, const AdapterSpec& spec = {});
Scenario load_scenario(const std::filesystem::path& path, const AdapterSpec& spec = {});
void write_scenario(std::ostream& out, const Scenario& scenario);

struct ScenarioGenOptions {
    double min_duration_s = 10.0;
    double max_duration_s = 60.0;
    double noise_level = 0.0;
    double attention_sharpness = 2.0;
};

// Random but seed-deterministic script: words of 0.2-0.6 s with short gaps
// and occasional pauses of 1-2 s.
Scenario generate_scenario(std::uint64_t seed, const ScenarioGenOptions& options = {},
                           const AdapterSpec& spec = {});

} // namespace simulu
