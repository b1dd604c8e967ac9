#include "simulu/harness.hpp"

#include "simulu/errors.hpp"
#include "simulu/local_agreement.hpp"
#include "simulu/oracle_adapter.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace simulu {

namespace {

double delay_at(std::span<const double> delays, std::size_t step) {
    return step < delays.size() ? delays[step] : 0.0;
}

std::string join(const Tokens& tokens) {
    std::string out;
    for (const std::string& t : tokens) {
        if (!out.empty()) {
            out += ' ';
        }
        out += t;
    }
    return out;
}

Tokens split_tokens(const std::string& s) {
    Tokens out;
    std::istringstream in(s);
    std::string t;
    while (in >> t) {
        out.push_back(t);
    }
    return out;
}

} // namespace

SimulRunOutput run_simulu(ModelAdapter& adapter, const ChunkSource& chunks, const RunOptions& options,
                          Tokens reference) {
    StreamSession session(options.config, adapter);
    SimulRunOutput out;
    RunResult& run = out.result;
    run.policy = "simulu";
    run.config = options.config;
    run.reference = std::move(reference);

    std::size_t steps = 0;
    double pending_delay = 0.0;
    auto record = [&](const std::optional<Emission>& e, bool force) {
        pending_delay += delay_at(options.step_delays, steps++);
        if (!e && !force) {
            return;
        }
        EmissionRecord rec;
        rec.source_consumed_at_emit = session.source_consumed();
        rec.compute_delay = pending_delay;
        if (e) {
            rec.tokens = e->new_tokens;
            rec.target_samples = static_cast<std::int64_t>(e->waveform.size());
            out.waveform.insert(out.waveform.end(), e->waveform.begin(), e->waveform.end());
        }
        pending_delay = 0.0;
        run.emissions.push_back(std::move(rec));
    };

    while (std::optional<AudioChunk> chunk = chunks()) {
        if (options.trace) {
            options.trace->write_chunk(*chunk);
        }
        run.source_duration += chunk->duration;
        session.push_audio(*chunk);
        record(session.step(), false);
        if (options.after_step) {
            options.after_step(session);
        }
    }
    record(session.finish(), true);
    if (options.after_step) {
        options.after_step(session);
    }
    run.finished = true;
    if (options.trace) {
        options.trace->flush();
    }
    return out;
}

SimulRunOutput run_scenario_simulu(const Scenario& scenario, const RunOptions& options) {
    OracleAdapter oracle(scenario.script);
    const AdapterSpec spec = oracle.spec();
    const std::vector<float> audio = render_script_audio(scenario.script, scenario.duration_s, spec);
    std::vector<AudioChunk> chunks = split_into_chunks(audio, options.config.segment_size, spec);
    std::size_t next = 0;
    ChunkSource source = [&]() -> std::optional<AudioChunk> {
        if (next >= chunks.size()) {
            return std::nullopt;
        }
        return std::move(chunks[next++]);
    };
    RunOptions opts = options;
    if (opts.step_delays.empty()) {
        opts.step_delays = scenario.delays_s;
    }
    if (opts.trace) {
        RecordingAdapter recorder(oracle, *opts.trace);
        return run_simulu(recorder, source, opts, scenario.reference);
    }
    return run_simulu(oracle, source, opts, scenario.reference);
}

SimulRunOutput run_trace_simulu(Trace trace, const RunOptions& options) {
    Tokens reference;
    if (auto it = trace.header.metadata.find("reference"); it != trace.header.metadata.end()) {
        reference = split_tokens(it->second);
    }
    ReplayAdapter replay(std::move(trace));
    SimulRunOutput out = run_simulu(replay, [&replay] { return replay.next_chunk(); }, options, std::move(reference));
    if (!replay.exhausted()) {
        throw TraceDesyncError("replay finished with unconsumed trace events");
    }
    return out;
}

RunResult run_local_agreement(const WindowDecoder& decoder, std::span<const float> audio, const AdapterSpec& spec,
                              double segment_size, const VadConfig& vad, std::span<const double> step_delays,
                              Tokens reference) {
    if (!(segment_size > 0.0)) {
        throw ConfigError("segment size must be positive");
    }
    RunResult run;
    run.policy = "local-agreement";
    run.config = PolicyConfig{0, 0, segment_size};
    run.text_only = true;
    run.reference = std::move(reference);
    run.source_duration = static_cast<double>(audio.size()) / static_cast<double>(spec.sample_rate);

    const auto sr = static_cast<double>(spec.sample_rate);
    const std::int64_t chunk = seconds_to_samples(segment_size, spec);
    std::size_t steps = 0;
    double pending_delay = 0.0;
    auto record = [&](Tokens tokens, std::int64_t at_sample) {
        pending_delay += delay_at(step_delays, steps++);
        if (tokens.empty()) {
            return;
        }
        EmissionRecord rec;
        rec.source_consumed_at_emit = static_cast<double>(at_sample) / sr;
        rec.tokens = std::move(tokens);
        rec.compute_delay = pending_delay;
        pending_delay = 0.0;
        run.emissions.push_back(std::move(rec));
    };

    for (const Segment& seg : vad_segment(audio, spec.sample_rate, vad)) {
        // Memory reset: every segment starts from an empty session.
        LaSession la;
        const std::int64_t seg_frame = samples_to_frames(seg.begin, spec);
        for (std::int64_t pos = seg.begin; pos < seg.end;) {
            const std::int64_t end = std::min(pos + chunk, seg.end);
            la.source_consumed = static_cast<double>(end) / sr;
            record(la.step(decoder(seg_frame, samples_to_frames(end, spec))).committed, end);
            pos = end;
        }
        record(la.flush().committed, seg.end);
    }

    EmissionRecord flush;
    flush.source_consumed_at_emit = run.source_duration;
    flush.compute_delay = pending_delay + delay_at(step_delays, steps);
    run.emissions.push_back(std::move(flush));
    run.finished = true;
    return run;
}

RunResult run_scenario_local_agreement(const Scenario& scenario, double segment_size, const VadConfig& vad) {
    const OracleAdapter oracle(scenario.script);
    const AdapterSpec spec = oracle.spec();
    const std::vector<float> audio = render_script_audio(scenario.script, scenario.duration_s, spec);
    return run_local_agreement([&oracle](std::int64_t b, std::int64_t e) { return oracle.decode_window(b, e); },
                               audio, spec, segment_size, vad, scenario.delays_s, scenario.reference);
}

std::string format_emission_log(const RunResult& run) {
    std::string out;
    std::size_t ordinal = 0;
    for (const EmissionRecord& r : run.emissions) {
        if (r.tokens.empty() && r.target_samples == 0) {
            continue;
        }
        nlohmann::ordered_json j;
        j["ordinal"] = ordinal++;
        j["source_s"] = r.source_consumed_at_emit;
        if (!run.text_only) {
            j["samples"] = r.target_samples;
        }
        j["tokens"] = join(r.tokens);
        out += j.dump();
        out += '\n';
    }
    return out;
}

SweepOutcome run_sweep(const SweepGrid& grid, std::span<const Scenario> scenarios, unsigned jobs) {
    struct Cell {
        PolicyConfig config;
    };
    const bool la = grid.policy == "local-agreement";
    if (!la && grid.policy != "simulu") {
        throw ConfigError("unknown policy '" + grid.policy + "'");
    }
    if (grid.segment_sizes.empty() || (!la && (grid.cutoff_frames.empty() || grid.word_history.empty()))) {
        throw ConfigError("sweep grid lists must be non-empty");
    }
    if (scenarios.empty()) {
        throw ConfigError("sweep needs at least one scenario");
    }

    std::vector<Cell> cells;
    for (double seg : grid.segment_sizes) {
        if (la) {
            cells.push_back({PolicyConfig{0, 0, seg}});
            continue;
        }
        for (std::int64_t f : grid.cutoff_frames) {
            for (std::int64_t wh : grid.word_history) {
                cells.push_back({PolicyConfig{f, wh, seg}});
            }
        }
    }

    std::vector<std::optional<AggregateRow>> rows(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                std::vector<RunResult> runs;
                for (const Scenario& sc : scenarios) {
                    if (la) {
                        runs.push_back(run_scenario_local_agreement(sc, cells[i].config.segment_size, grid.vad));
                    } else {
                        cells[i].config.validate();
                        RunOptions opts;
                        opts.config = cells[i].config;
                        runs.push_back(run_scenario_simulu(sc, opts).result);
                    }
                }
                std::vector<AggregateRow> agg = aggregate(runs);
                rows[i] = std::move(agg.front());
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }

    SweepOutcome outcome;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (rows[i]) {
            outcome.rows.push_back(std::move(*rows[i]));
        } else {
            const PolicyConfig& c = cells[i].config;
            outcome.failures.push_back("cell f=" + std::to_string(c.cutoff_frames) + " wh=" +
                                       std::to_string(c.word_history) + " segment=" + std::to_string(c.segment_size) +
                                       ": " + errors[i]);
        }
    }
    // Cell key order, independent of the grid's listing order.
    std::stable_sort(outcome.rows.begin(), outcome.rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
        return std::tie(a.policy, a.cutoff_frames, a.word_history, a.segment_size) <
               std::tie(b.policy, b.cutoff_frames, b.word_history, b.segment_size);
    });
    return outcome;
}

TraceReport validate_trace(const std::filesystem::path& path) {
    TraceReport report;
    std::ifstream in(path);
    if (!in) {
        report.findings.push_back({0, "cannot open " + path.string()});
        return report;
    }
    TraceScan scan = scan_trace(in, path.parent_path());
    report.findings = std::move(scan.findings);
    if (scan.header) {
        report.version = scan.header->version;
    }
    for (const TraceEvent& e : scan.events) {
        if (std::holds_alternative<ChunkEvent>(e)) {
            ++report.chunks;
        } else if (std::holds_alternative<TranscribeEvent>(e)) {
            ++report.transcribes;
        } else {
            ++report.synthesizes;
        }
    }
    if (!report.findings.empty() || !scan.header) {
        report.replay_error = "skipped: schema findings";
        return report;
    }
    try {
        RunOptions opts;
        opts.config = scan.header->policy.value_or(PolicyConfig{});
        SimulRunOutput out = run_trace_simulu(Trace{*scan.header, std::move(scan.events)}, opts);
        report.replay_emissions = out.result.emissions.size();
        report.replay_ok = true;
    } catch (const std::exception& e) {
        report.replay_error = e.what();
    }
    return report;
}

} // namespace simulu
