// simulu: run, sweep and validate simultaneous speech-to-speech translation
// policies over scripted scenarios, WAV input or recorded model traces.

#include "simulu/errors.hpp"
#include "simulu/harness.hpp"
#include "simulu/oracle_adapter.hpp"
#include "simulu/scenario.hpp"
#include "simulu/trace.hpp"
#include "simulu/wav.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace simulu;

namespace {

void configure_logging() {
    spdlog::set_default_logger(spdlog::stderr_logger_mt("simulu"));
    spdlog::set_pattern("[%l] %v");
    if (const char* level = std::getenv("SIMULU_LOG_LEVEL")) {
        spdlog::set_level(spdlog::level::from_str(level));
    } else {
        spdlog::set_level(spdlog::level::warn);
    }
}

std::vector<double> load_delays(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open delays file " + path.string());
    }
    std::vector<double> delays;
    double d = 0.0;
    while (in >> d) {
        if (d < 0.0) {
            throw std::runtime_error("delays must be non-negative");
        }
        delays.push_back(d);
    }
    if (!in.eof()) {
        throw std::runtime_error("delays file " + path.string() + " holds a non-numeric entry");
    }
    return delays;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        out += (out.empty() ? "" : " ") + t;
    }
    return out;
}

WaveformStorage parse_storage(const std::string& s) {
    if (s == "inline") {
        return WaveformStorage::Inline;
    }
    if (s == "none") {
        return WaveformStorage::None;
    }
    return WaveformStorage::Pcm16Sidecar;
}

// Writes to `path`, or to stdout when empty.
void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
}

struct RunArgs {
    std::string policy = "simulu";
    std::int64_t cutoff = 4;
    std::int64_t word_history = 10;
    double segment = 0.5;
    std::string scenario, trace, wav, out, summary, delays, trace_out;
    std::string storage = "pcm16";
    std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
    if (a.policy != "simulu" && a.policy != "local-agreement") {
        throw ConfigError("unknown policy '" + a.policy + "'");
    }
    std::vector<double> delays;
    if (!a.delays.empty()) {
        delays = load_delays(a.delays);
    }

    RunResult result;
    if (!a.trace.empty()) {
        if (a.policy != "simulu") {
            throw ConfigError("trace replay drives the simulu policy only");
        }
        Trace trace = read_trace(fs::path(a.trace));
        RunOptions opts;
        opts.config = trace.header.policy.value_or(PolicyConfig{});
        if (sub.count("--cutoff-frames")) opts.config.cutoff_frames = a.cutoff;
        if (sub.count("--word-history")) opts.config.word_history = a.word_history;
        if (sub.count("--segment-size")) opts.config.segment_size = a.segment;
        opts.step_delays = delays;
        result = run_trace_simulu(std::move(trace), opts).result;
    } else {
        if (a.scenario.empty()) {
            throw ConfigError("one of --scenario or --trace is required (--wav needs --scenario for the oracle script)");
        }
        Scenario sc = load_scenario(a.scenario);
        if (a.seed) {
            sc.script.noise_seed = *a.seed;
        }
        if (!delays.empty()) {
            sc.delays_s = delays;
        }
        std::vector<float> audio;
        const AdapterSpec spec{};
        if (!a.wav.empty()) {
            WavData wav = read_wav(a.wav);
            if (wav.sample_rate != spec.sample_rate) {
                throw ConfigError("WAV sample rate " + std::to_string(wav.sample_rate) + " != " +
                                  std::to_string(spec.sample_rate) + " (resampling is not supported)");
            }
            audio = std::move(wav.samples);
        } else {
            audio = render_script_audio(sc.script, sc.duration_s, spec);
        }

        if (a.policy == "local-agreement") {
            OracleAdapter oracle(sc.script);
            result = run_local_agreement(
                [&oracle](std::int64_t b, std::int64_t e) { return oracle.decode_window(b, e); }, audio, spec,
                a.segment, VadConfig{}, sc.delays_s, sc.reference);
        } else {
            RunOptions opts;
            opts.config = PolicyConfig{a.cutoff, a.word_history, a.segment};
            opts.config.validate();
            opts.step_delays = sc.delays_s;
            OracleAdapter oracle(sc.script, spec);
            std::vector<AudioChunk> chunks = split_into_chunks(audio, a.segment, spec);
            std::size_t next = 0;
            ChunkSource source = [&]() -> std::optional<AudioChunk> {
                if (next >= chunks.size()) return std::nullopt;
                return std::move(chunks[next++]);
            };
            if (!a.trace_out.empty()) {
                TraceHeader header;
                header.spec = spec;
                header.policy = opts.config;
                header.metadata["source"] = "oracle";
                header.metadata["reference"] = join(sc.reference);
                TraceWriter writer(fs::path(a.trace_out), header, parse_storage(a.storage));
                RecordingAdapter recorder(oracle, writer);
                opts.trace = &writer;
                result = run_simulu(recorder, source, opts, sc.reference).result;
            } else {
                result = run_simulu(oracle, source, opts, sc.reference).result;
            }
        }
    }

    spdlog::info("run finished: {} emission records, {:.3f} s of source", result.emissions.size(),
                 result.source_duration);
    emit(format_emission_log(result), a.out);

    std::ostringstream summary;
    const std::vector<RunResult> runs{result};
    write_metrics_csv(summary, aggregate(runs));
    emit(summary.str(), a.summary);
    return 0;
}

struct SweepArgs {
    std::string policy = "simulu";
    std::vector<std::int64_t> cutoffs{2, 4, 6, 8};
    std::vector<std::int64_t> word_histories{5, 10, 15, 20, 25};
    std::vector<double> segments{0.5};
    std::vector<std::string> scenarios;
    std::string scenario_dir;
    std::string out;
    unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& a) {
    std::vector<fs::path> paths(a.scenarios.begin(), a.scenarios.end());
    if (!a.scenario_dir.empty()) {
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(a.scenario_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".scn") {
                found.push_back(entry.path());
            }
        }
        std::sort(found.begin(), found.end());
        paths.insert(paths.end(), found.begin(), found.end());
    }
    if (paths.empty()) {
        throw ConfigError("sweep needs --scenario or --scenario-dir");
    }
    std::vector<Scenario> scenarios;
    for (const fs::path& p : paths) {
        scenarios.push_back(load_scenario(p));
    }

    SweepGrid grid;
    grid.policy = a.policy;
    grid.cutoff_frames = a.cutoffs;
    grid.word_history = a.word_histories;
    grid.segment_sizes = a.segments;
    const unsigned jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    SweepOutcome outcome = run_sweep(grid, scenarios, jobs);

    std::ostringstream csv;
    write_metrics_csv(csv, outcome.rows);
    emit(csv.str(), a.out);
    for (const std::string& f : outcome.failures) {
        spdlog::error("{}", f);
    }
    return outcome.failures.empty() ? 0 : 1;
}

int cmd_validate(const std::string& path) {
    TraceReport r = validate_trace(path);
    for (const TraceFinding& f : r.findings) {
        std::cout << path << ":" << f.line << ": " << f.message << '\n';
    }
    if (r.ok()) {
        std::cout << "ok version=" << r.version << " chunks=" << r.chunks << " transcribe=" << r.transcribes
                  << " synthesize=" << r.synthesizes << " replay_emissions=" << r.replay_emissions << '\n';
        return 0;
    }
    if (r.findings.empty()) {
        std::cout << path << ": replay failed: " << r.replay_error << '\n';
    }
    std::cout << "invalid findings=" << r.findings.size() << '\n';
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Simultaneous speech-to-speech translation policy harness"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one stream through a policy");
    run_cmd->add_option("--policy", run.policy, "simulu | local-agreement")->check(
        CLI::IsMember({"simulu", "local-agreement"}));
    run_cmd->add_option("--cutoff-frames", run.cutoff, "Unstable trailing encoder frames (f)");
    run_cmd->add_option("--word-history", run.word_history, "Words kept in the text history (WH)");
    run_cmd->add_option("--segment-size", run.segment, "Seconds of audio per chunk");
    auto* scen = run_cmd->add_option("--scenario", run.scenario, "Scripted scenario file")->check(CLI::ExistingFile);
    auto* trace = run_cmd->add_option("--trace", run.trace, "Replay a recorded trace")->check(CLI::ExistingFile);
    run_cmd->add_option("--wav", run.wav, "16-bit PCM mono source audio (script from --scenario)")
        ->check(CLI::ExistingFile)
        ->needs(scen);
    scen->excludes(trace);
    run_cmd->add_option("--seed", run.seed, "Override the scenario noise seed");
    run_cmd->add_option("--out", run.out, "Emission log path (default stdout)");
    run_cmd->add_option("--summary", run.summary, "Metrics CSV path (default stdout)");
    run_cmd->add_option("--delays", run.delays, "Injected compute delay per step, seconds, whitespace separated")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--trace-out", run.trace_out, "Record the model calls of this run as a trace");
    run_cmd->add_option("--waveform-storage", run.storage, "Trace waveform storage")
        ->check(CLI::IsMember({"inline", "pcm16", "none"}));

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a configuration grid and write one CSV row per cell");
    sweep_cmd->add_option("--policy", sweep.policy)->check(CLI::IsMember({"simulu", "local-agreement"}));
    sweep_cmd->add_option("--cutoff-frames", sweep.cutoffs)->delimiter(',');
    sweep_cmd->add_option("--word-history", sweep.word_histories)->delimiter(',');
    sweep_cmd->add_option("--segment-size", sweep.segments)->delimiter(',');
    sweep_cmd->add_option("--scenario", sweep.scenarios)->check(CLI::ExistingFile);
    sweep_cmd->add_option("--scenario-dir", sweep.scenario_dir)->check(CLI::ExistingDirectory);
    sweep_cmd->add_option("--out", sweep.out, "CSV path (default stdout)");
    sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads (default: hardware concurrency)");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate-trace", "Check a trace file and dry-run its replay");
    validate_cmd->add_option("path", validate_path)->required();

    std::uint64_t gen_seed = 0;
    ScenarioGenOptions gen;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen-scenario", "Write a random scripted scenario");
    gen_cmd->add_option("--seed", gen_seed)->required();
    gen_cmd->add_option("--min-duration", gen.min_duration_s);
    gen_cmd->add_option("--max-duration", gen.max_duration_s);
    gen_cmd->add_option("--noise", gen.noise_level);
    gen_cmd->add_option("--sharpness", gen.attention_sharpness);
    gen_cmd->add_option("--out", gen_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            return cmd_run(run, *run_cmd);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweep);
        }
        if (*validate_cmd) {
            return cmd_validate(validate_path);
        }
        if (*gen_cmd) {
            std::ostringstream text;
            write_scenario(text, generate_scenario(gen_seed, gen));
            emit(text.str(), gen_out);
            return 0;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
