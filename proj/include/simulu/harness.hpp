#pragma once

#include "simulu/adapter.hpp"
#include "simulu/metrics.hpp"
#include "simulu/scenario.hpp"
#include "simulu/simulu_policy.hpp"
#include "simulu/trace.hpp"
#include "simulu/vad.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simulu {

using ChunkSource = std::function<std::optional<AudioChunk>()>;

struct RunOptions {
    PolicyConfig config;
    std::vector<double> step_delays; // injected compute delay per step, seconds; missing steps are 0
    TraceWriter* trace = nullptr;    // receives chunk events; pair with a RecordingAdapter on the same writer
    std::function<void(const StreamSession&)> after_step;
};

struct SimulRunOutput {
    RunResult result;
    std::vector<float> waveform; // concatenation of every emitted waveform
};

// push_audio + step per chunk, then finish. The last emission record is the
// end-of-stream flush (possibly empty).
SimulRunOutput run_simulu(ModelAdapter& adapter, const ChunkSource& chunks, const RunOptions& options,
                          Tokens reference = {});

SimulRunOutput run_scenario_simulu(const Scenario& scenario, const RunOptions& options);

// Replays a recorded trace through a fresh session.
SimulRunOutput run_trace_simulu(Trace trace, const RunOptions& options);

// Tokens of all words lying inside frames [begin, end) of the source.
using WindowDecoder = std::function<Tokens(std::int64_t begin_frame, std::int64_t end_frame)>;

// Cascade-side baseline: the stream is cut into VAD segments, each decoded
// from scratch on a fresh LocalAgreement session every `segment_size` seconds.
RunResult run_local_agreement(const WindowDecoder& decoder, std::span<const float> audio, const AdapterSpec& spec,
                              double segment_size, const VadConfig& vad, std::span<const double> step_delays = {},
                              Tokens reference = {});

RunResult run_scenario_local_agreement(const Scenario& scenario, double segment_size, const VadConfig& vad = {});

// One JSON object per non-empty emission record:
// {"ordinal":0,"source_s":1.5,"samples":640,"tokens":"il gatto"}
// Text-only runs omit "samples".
std::string format_emission_log(const RunResult& run);

struct SweepGrid {
    std::string policy = "simulu";
    std::vector<std::int64_t> cutoff_frames{4};
    std::vector<std::int64_t> word_history{10};
    std::vector<double> segment_sizes{0.5};
    VadConfig vad;
};

struct SweepOutcome {
    std::vector<AggregateRow> rows; // ordered by cell key
    std::vector<std::string> failures;
};

// Every cell of the grid runs each scenario on its own session and adapter;
// cells run on up to `jobs` threads.
SweepOutcome run_sweep(const SweepGrid& grid, std::span<const Scenario> scenarios, unsigned jobs = 1);

struct TraceReport {
    int version = 0;
    std::size_t chunks = 0;
    std::size_t transcribes = 0;
    std::size_t synthesizes = 0;
    std::vector<TraceFinding> findings;
    bool replay_ok = false;
    std::string replay_error;
    std::size_t replay_emissions = 0;

    bool ok() const { return findings.empty() && replay_ok; }
};

// Schema walk plus a replay dry run with the policy stored in the header
// (defaults otherwise).
TraceReport validate_trace(const std::filesystem::path& path);

} // namespace simulu
