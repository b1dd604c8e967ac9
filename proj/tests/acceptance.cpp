// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "oracles.hpp"

#include "simulu/alignment.hpp"
#include "simulu/harness.hpp"
#include "simulu/local_agreement.hpp"
#include "simulu/metrics.hpp"
#include "simulu/oracle_adapter.hpp"
#include "simulu/scenario.hpp"
#include "simulu/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace simulu;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr int kAlignCases = 10000;
constexpr double kAlignBudgetS = 5.0;
constexpr int kMonotoneScenarios = 50;
constexpr int kConservationScenarios = 100;
constexpr int kLaSequences = 1000;
constexpr double kSweepBudgetS = 60.0;
constexpr double kExactMsTol = 1e-9; // floating sums of injected delays
constexpr double kBleuTol = 1e-6;
constexpr double kBleuFixture = 51.73183782924148;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// The shared scenario family for conservation, history and reduction checks.
Scenario conservation_scenario(int i) {
    return generate_scenario(1000 + static_cast<std::uint64_t>(i), ScenarioGenOptions{10.0, 60.0, 0.3, 1.0});
}

std::vector<float> offline_synthesis(const Scenario& sc, const Tokens& tokens) {
    OracleAdapter oracle(sc.script);
    TextHistory full;
    for (const std::string& t : tokens) {
        full.append(t, true, 0);
    }
    return oracle.synthesize(full).waveform;
}

bool same_bytes(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

Outcome alignatt_equivalence() {
    std::mt19937_64 rng(20240601);
    const auto t0 = Clock::now();
    int mismatches = 0;
    for (int i = 0; i < kAlignCases; ++i) {
        const std::int64_t frames = static_cast<std::int64_t>(rng() % 200) + 1;
        const std::int64_t cutoff = static_cast<std::int64_t>(rng() % 12);
        AlignmentVector align(rng() % 40);
        for (auto& a : align) {
            a = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(frames));
        }
        mismatches += stable_prefix_len(align, frames, cutoff) != oracle::first_violation_scan(align, frames, cutoff);
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < kAlignBudgetS,
            std::to_string(kAlignCases) + " cases, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(t) + " s"};
}

Outcome monotone_latency() {
    int violations = 0;
    std::size_t checkpoints = 0;
    for (int i = 0; i < kMonotoneScenarios; ++i) {
        const Scenario sc = generate_scenario(500 + static_cast<std::uint64_t>(i), ScenarioGenOptions{10.0, 60.0, 0.0, 2.0});
        std::vector<RunResult> runs;
        for (std::int64_t f : {2, 4, 6, 8}) {
            RunOptions opts;
            opts.config = PolicyConfig{f, 10, 0.5};
            runs.push_back(run_scenario_simulu(sc, opts).result);
        }
        // Cumulative tokens at every chunk boundary.
        const auto steps = static_cast<int>(std::ceil(sc.duration_s / 0.5));
        for (int k = 1; k <= steps; ++k) {
            const double t = std::min(0.5 * k, sc.duration_s) + 1e-9;
            std::size_t prev = SIZE_MAX;
            for (const RunResult& r : runs) {
                std::size_t n = 0;
                for (const EmissionRecord& e : r.emissions) {
                    n += e.source_consumed_at_emit <= t ? e.tokens.size() : 0;
                }
                violations += n > prev;
                prev = n;
            }
            ++checkpoints;
        }
    }
    return {violations == 0, std::to_string(kMonotoneScenarios) + " noise-free scenarios, " +
                                 std::to_string(checkpoints) + " source-time prefixes, " +
                                 std::to_string(violations) + " violations"};
}

struct ConservationStats {
    int runs = 0;
    int mismatched = 0;
    int history_violations = 0;
    int bad_lengths = 0;
    std::size_t emissions = 0;
    std::size_t steps = 0;
};

const ConservationStats& conservation_runs() {
    static const ConservationStats stats = [] {
        ConservationStats s;
        for (int i = 0; i < kConservationScenarios; ++i) {
            const Scenario sc = conservation_scenario(i);
            for (std::int64_t wh : {5, 10, 25}) {
                RunOptions opts;
                opts.config = PolicyConfig{4, wh, 0.5};
                opts.after_step = [&s, wh](const StreamSession& session) {
                    ++s.steps;
                    bool ok = session.text().word_count() <= static_cast<std::size_t>(wh);
                    for (std::int64_t f : session.text().frame_alignment()) {
                        ok = ok && f >= session.speech().discarded_frames();
                    }
                    s.history_violations += ok ? 0 : 1;
                };
                const SimulRunOutput out = run_scenario_simulu(sc, opts);
                ++s.runs;
                s.mismatched += same_bytes(out.waveform, offline_synthesis(sc, committed_tokens(out.result))) ? 0 : 1;
                for (const EmissionRecord& e : out.result.emissions) {
                    s.emissions += e.target_samples > 0;
                    s.bad_lengths += e.target_samples % 320 != 0;
                }
            }
        }
        return s;
    }();
    return stats;
}

Outcome output_conservation() {
    const ConservationStats& s = conservation_runs();
    return {s.mismatched == 0 && s.runs == 3 * kConservationScenarios,
            std::to_string(s.runs) + " runs (" + std::to_string(kConservationScenarios) +
                " scenarios x WH {5,10,25}), " + std::to_string(s.mismatched) + " waveform mismatches"};
}

Outcome history_bound() {
    const ConservationStats& s = conservation_runs();
    return {s.history_violations == 0 && s.steps > 0,
            std::to_string(s.steps) + " steps checked, " + std::to_string(s.history_violations) + " violations"};
}

Outcome reduction_rate() {
    const ConservationStats& s = conservation_runs();
    return {s.bad_lengths == 0 && s.emissions > 0,
            std::to_string(s.emissions) + " emissions, " + std::to_string(s.bad_lengths) + " not a multiple of 320"};
}

Outcome local_agreement() {
    std::mt19937_64 rng(777);
    int wrong = 0, retractions = 0;
    for (int i = 0; i < kLaSequences; ++i) {
        const Tokens truth = oracle::random_tokens(rng, 15, 6);
        std::vector<Tokens> hyps(rng() % 10 + 1);
        for (Tokens& h : hyps) {
            if (rng() % 5 == 0) {
                h = oracle::random_tokens(rng, 15, 6);
                continue;
            }
            h.assign(truth.begin(), truth.begin() + static_cast<long>(rng() % (truth.size() + 1)));
            if (!h.empty() && rng() % 4 == 0) {
                h[rng() % h.size()] = "x";
            }
        }
        const auto expected = oracle::la_simulate(hyps);
        LaSession la;
        for (std::size_t k = 0; k < hyps.size(); ++k) {
            const Tokens before = la.committed();
            wrong += la.step(hyps[k]).committed != expected[k];
            retractions += !std::equal(before.begin(), before.end(), la.committed().begin());
        }
    }
    return {wrong == 0 && retractions == 0, std::to_string(kLaSequences) + " sequences, " + std::to_string(wrong) +
                                                " commit mismatches, " + std::to_string(retractions) + " retractions"};
}

Outcome metrics_definitions() {
    // One word spanning frames 52..60: visible after the third 0.5 s chunk.
    Scenario sc;
    sc.script.words = {{52, 60, {"ciao"}, {3}}};
    sc.duration_s = 2.0;
    RunOptions opts;
    const RunResult ideal = run_scenario_simulu(sc, opts).result;
    opts.step_delays = {0.02, 0.03, 0.016, 0.025, 0.015};
    const RunResult delayed = run_scenario_simulu(sc, opts).result;

    const std::optional<double> so = start_offset(ideal);
    const double eo0 = end_offset_ms(ideal);
    const double eo = end_offset_ms(delayed);
    const bool pass = so && *so == 1.5 && eo0 == 0.0 && std::abs(eo - 106.0) <= kExactMsTol;
    std::ostringstream d;
    d.precision(12);
    d << "StartOffset " << (so ? *so : -1.0) << " s (expect 1.5), EndOffset " << eo << " ms (expect 106), ideal clock "
      << eo0 << " ms (expect 0)";
    return {pass, d.str()};
}

Outcome sweep_shape() {
    const fs::path out = fs::temp_directory_path() / "simulu_acceptance_sweep.csv";
    const std::string cmd = std::string(SIMULU_CLI_PATH) + " sweep --scenario-dir " + SIMULU_SCENARIO_DIR +
                            " --cutoff-frames 2,4,6,8 --word-history 5,10,15,20,25 --out " + out.string();
    const auto t0 = Clock::now();
    const int status = std::system(cmd.c_str());
    const double t = seconds_since(t0);
    std::ifstream in(out);
    std::string header, line;
    std::getline(in, header);
    int rows = 0;
    while (std::getline(in, line)) {
        rows += !line.empty();
    }
    const bool header_ok =
        header == std::string(kMetricsCsvHeader) + "\r" || header == std::string(kMetricsCsvHeader);
    const bool exit_ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    return {exit_ok && header_ok && rows == 20 && t < kSweepBudgetS,
            std::to_string(rows) + " rows, header " + (header_ok ? "exact" : "WRONG") + ", exit " +
                (exit_ok ? "0" : "nonzero") + ", " + std::to_string(t) + " s"};
}

Outcome trace_replay() {
    const Scenario sc = load_scenario(fs::path(SIMULU_SCENARIO_DIR) / "stream_01.scn");
    const fs::path path = fs::temp_directory_path() / "simulu_acceptance_trace.jsonl";
    RunOptions opts;
    opts.config = PolicyConfig{4, 10, 0.5};
    std::string live;
    {
        TraceHeader header;
        header.policy = opts.config;
        TraceWriter writer(path, header, WaveformStorage::Pcm16Sidecar);
        opts.trace = &writer;
        live = format_emission_log(run_scenario_simulu(sc, opts).result);
    }
    opts.trace = nullptr;
    const std::string replayed = format_emission_log(run_trace_simulu(read_trace(path), opts).result);
    const bool pass = !live.empty() && live == replayed;
    return {pass, std::to_string(live.size()) + " log bytes, " + (pass ? "identical" : "DIFFERENT")};
}

Outcome bleu() {
    auto split = [](const std::string& s) {
        std::istringstream in(s);
        Tokens out;
        for (std::string t; in >> t;) {
            out.push_back(t);
        }
        return out;
    };
    const std::vector<Tokens> refs{split("il gatto dorme sul divano"), split("oggi piove tanto in città"),
                                   split("la casa è molto grande e luminosa")};
    const std::vector<Tokens> disjoint{split("uno due tre quattro cinque"), split("sei sette otto nove"),
                                       split("dieci undici dodici tredici")};
    const std::vector<Tokens> hyps{split("il gatto dorme sul divano rosso"), split("oggi piove molto in città"),
                                   split("la casa è grande e luminosa")};
    const double identity = corpus_bleu(refs, refs);
    const double zero = corpus_bleu(disjoint, refs);
    const double fixture = corpus_bleu(hyps, refs);
    const bool pass = identity == 100.0 && zero == 0.0 && std::abs(fixture - kBleuFixture) <= kBleuTol;
    std::ostringstream d;
    d.precision(12);
    d << "identity " << identity << ", disjoint " << zero << ", fixture " << fixture << " (expect " << kBleuFixture
      << ")";
    return {pass, d.str()};
}

} // namespace

int main() {
    report("alignatt-oracle-equivalence", alignatt_equivalence);
    report("monotone-latency-knob", monotone_latency);
    report("output-conservation", output_conservation);
    report("history-bound", history_bound);
    report("reduction-rate-arithmetic", reduction_rate);
    report("local-agreement", local_agreement);
    report("metrics-definitions", metrics_definitions);
    report("sweep-shape", sweep_shape);
    report("trace-replay-determinism", trace_replay);
    report("corpus-bleu", bleu);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures;
}
