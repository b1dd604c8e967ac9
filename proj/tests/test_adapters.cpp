#include "simulu/alignment.hpp"
#include "simulu/errors.hpp"
#include "simulu/harness.hpp"
#include "simulu/oracle_adapter.hpp"
#include "simulu/trace.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace simulu;
namespace fs = std::filesystem;

namespace {

OracleScript two_words() {
    OracleScript s;
    s.words = {{2, 10, {"il"}, {2}}, {12, 30, {"gat", "@to"}, {3, 1}}, {60, 70, {"qui"}, {2}}};
    return s;
}

SpeechHistory history_of(std::int64_t frames) {
    SpeechHistory h;
    h.append(AudioChunk::from_samples(std::vector<float>(static_cast<std::size_t>(frames * 320), 0.0f), {}));
    return h;
}

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "simulu_tests";
    fs::create_directories(dir);
    return dir / name;
}

Trace small_trace(const Scenario& sc, const PolicyConfig& cfg) {
    std::ostringstream buf;
    TraceHeader header;
    header.policy = cfg;
    header.metadata["reference"] = "x";
    TraceWriter writer(buf, header, WaveformStorage::Inline);
    RunOptions opts;
    opts.config = cfg;
    opts.trace = &writer;
    run_scenario_simulu(sc, opts);
    std::istringstream in(buf.str());
    return read_trace(in);
}

} // namespace

TEST_CASE("oracle spec and script validation") {
    const OracleAdapter oracle(two_words());
    CHECK(oracle.spec() == AdapterSpec{});

    OracleScript overlap = two_words();
    overlap.words[1].start_frame = 5;
    CHECK_THROWS_AS(OracleAdapter{overlap}, ConfigError);
    OracleScript zero_units = two_words();
    zero_units.words[0].units_per_token = {0};
    CHECK_THROWS_AS(OracleAdapter{zero_units}, ConfigError);
}

TEST_CASE("oracle transcription covers completed words with argmax inside their spans") {
    OracleAdapter oracle(two_words());
    const SpeechHistory h = history_of(40);
    const TranscribeResult tr = oracle.transcribe(h, TextHistory{});
    CHECK(tr.new_tokens == std::vector<std::string>{"il", "gat", "@to"});
    CHECK(tr.word_start_flags == std::vector<bool>{true, true, false});
    CHECK_NOTHROW(validate_attention(tr.speech_text_attention));
    const AlignmentVector a = row_argmax(tr.speech_text_attention);
    CHECK(a[0] >= 2);
    CHECK(a[0] < 10);
    CHECK(a[1] >= 12);
    CHECK(a[2] < 30);
    CHECK(a[1] < a[2]);

    // Nothing newly covered.
    TextHistory prefix;
    for (const std::string& t : tr.new_tokens) {
        prefix.append(t, true, 0);
    }
    const TranscribeResult none = oracle.transcribe(h, prefix);
    CHECK(none.new_tokens.empty());
    CHECK(none.speech_text_attention.rows() == 0);
}

TEST_CASE("sharp noise-free oracle attention peaks at the scripted centres") {
    OracleScript s = two_words();
    s.attention_sharpness = 1000.0;
    OracleAdapter oracle(s);
    const TranscribeResult tr = oracle.transcribe(history_of(80), TextHistory{});
    const AlignmentVector a = row_argmax(tr.speech_text_attention);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == oracle.token_center(i));
    }
    CHECK(a == AlignmentVector{5, 16, 25, 64});
}

TEST_CASE("noisy oracle attention is normalized and seed-deterministic") {
    OracleScript s = two_words();
    s.noise_level = 0.5;
    s.noise_seed = 9;
    OracleAdapter a(s), b(s);
    const SpeechHistory h = history_of(80);
    const Attention x = a.transcribe(h, {}).speech_text_attention;
    CHECK_NOTHROW(validate_attention(x));
    CHECK(x == b.transcribe(h, {}).speech_text_attention);
    s.noise_seed = 10;
    OracleAdapter c(s);
    CHECK(x != c.transcribe(h, {}).speech_text_attention);
}

TEST_CASE("oracle synthesis") {
    OracleAdapter oracle(two_words());
    TextHistory t;
    t.append("il", true, 5);
    t.append("gat", true, 16);
    const SynthesisOutput out = oracle.synthesize(t);
    CHECK(out.units.size() == 5);
    CHECK(out.waveform.size() == 1600);
    CHECK_NOTHROW(validate_attention(out.text_unit_attention));
    CHECK(row_argmax(out.text_unit_attention) == AlignmentVector{0, 0, 1, 1, 1});
    CHECK_THROWS_AS(oracle.synthesize(TextHistory{}), AdapterError);

    // Units are a function of the stream-global token index.
    TextHistory tail = t.suffix(1);
    const SynthesisOutput out2 = oracle.synthesize(tail);
    CHECK(std::vector<std::int32_t>(out.units.begin() + 2, out.units.end()) == out2.units);
}

TEST_CASE("trace round trip") {
    Scenario sc;
    sc.script = two_words();
    sc.script.noise_level = 0.2;
    sc.duration_s = 1.5;
    sc.reference = sc.script.target_tokens();
    const PolicyConfig cfg{2, 10, 0.5};

    for (WaveformStorage storage : {WaveformStorage::Inline, WaveformStorage::Pcm16Sidecar, WaveformStorage::None}) {
        const fs::path path = temp_path("round_trip.jsonl");
        TraceHeader header;
        header.policy = cfg;
        RunOptions opts;
        opts.config = cfg;
        SimulRunOutput live;
        {
            TraceWriter writer(path, header, storage);
            opts.trace = &writer;
            live = run_scenario_simulu(sc, opts);
        }
        Trace trace = read_trace(path);
        CHECK(trace.header.spec == AdapterSpec{});
        CHECK(trace.header.policy == cfg);
        CHECK(trace.events.size() > 3);
        write_trace(temp_path("copy.jsonl"), trace, WaveformStorage::Inline);
        const Trace copy = read_trace(temp_path("copy.jsonl"));
        CHECK(copy.events.size() == trace.events.size());

        opts.trace = nullptr;
        const SimulRunOutput replay = run_trace_simulu(std::move(trace), opts);
        CHECK(format_emission_log(replay.result) == format_emission_log(live.result));
        CHECK(replay.result.emissions.size() == live.result.emissions.size());
        if (storage != WaveformStorage::None) {
            CHECK(replay.waveform == live.waveform);
        } else {
            CHECK(replay.waveform.size() == live.waveform.size());
        }
    }
}

TEST_CASE("replay desync is detected") {
    Scenario sc;
    sc.script = two_words();
    sc.duration_s = 1.5;
    const Trace trace = small_trace(sc, PolicyConfig{2, 10, 0.5});
    RunOptions opts;

    SUBCASE("different cutoff changes the call sequence") {
        // "qui" (centre 64) falls in the last 12 of 75 frames.
        opts.config = PolicyConfig{12, 10, 0.5};
        CHECK_THROWS_AS(run_trace_simulu(trace, opts), TraceDesyncError);
    }
    SUBCASE("truncated event list") {
        Trace cut = trace;
        cut.events.pop_back();
        opts.config = PolicyConfig{2, 10, 0.5};
        CHECK_THROWS_AS(run_trace_simulu(cut, opts), TraceDesyncError);
    }
    SUBCASE("direct call on a chunk event") {
        ReplayAdapter replay(trace);
        CHECK_THROWS_AS(replay.transcribe(SpeechHistory{}, TextHistory{}), TraceDesyncError);
    }
}

TEST_CASE("trace reader errors") {
    Scenario sc;
    sc.script = two_words();
    sc.duration_s = 1.5;
    std::ostringstream buf;
    {
        TraceWriter writer(buf, TraceHeader{});
        RunOptions opts;
        opts.trace = &writer;
        run_scenario_simulu(sc, opts);
    }
    const std::string text = buf.str();

    SUBCASE("truncated last line") {
        std::istringstream in(text.substr(0, text.size() - 20));
        const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
        try {
            read_trace(in);
            FAIL("expected a parse error");
        } catch (const TraceParseError& e) {
            CHECK(e.line() == lines);
        }
    }
    SUBCASE("version mismatch") {
        std::string v2 = text;
        v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
        std::istringstream in(v2);
        CHECK_THROWS_AS(read_trace(in), TraceVersionError);
    }
    SUBCASE("matrix dimension mismatch flags that line only") {
        std::istringstream lines_in(text);
        std::string line, edited;
        std::size_t n = 0, target = 0;
        while (std::getline(lines_in, line)) {
            ++n;
            const auto pos = line.find("\"rows\":1,");
            if (target == 0 && line.find("\"transcribe\"") != std::string::npos && pos != std::string::npos) {
                line.replace(pos, 9, "\"rows\":3,");
                target = n;
            }
            edited += line + "\n";
        }
        REQUIRE(target > 0);
        std::istringstream in(edited);
        const TraceScan scan = scan_trace(in);
        REQUIRE(scan.findings.size() == 1);
        CHECK(scan.findings[0].line == target);
    }
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK_THROWS_AS(read_trace(in), TraceParseError);
    }
}

TEST_CASE("validate_trace reports counts and findings") {
    Scenario sc;
    sc.script = two_words();
    sc.duration_s = 1.5;
    const fs::path path = temp_path("valid.jsonl");
    {
        TraceHeader header;
        header.policy = PolicyConfig{4, 10, 0.5};
        TraceWriter writer(path, header, WaveformStorage::Pcm16Sidecar);
        RunOptions opts;
        opts.config = *header.policy;
        opts.trace = &writer;
        run_scenario_simulu(sc, opts);
    }
    const TraceReport ok = validate_trace(path);
    CHECK(ok.ok());
    CHECK(ok.version == 1);
    CHECK(ok.chunks == 3);
    CHECK(ok.transcribes == 4);
    CHECK(ok.synthesizes > 0);

    const fs::path bad = temp_path("bad.jsonl");
    {
        std::ifstream in(path);
        std::ofstream out(bad);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            out << (++n == 3 ? std::string("{\"kind\":\"chunk\"") : line) << '\n';
        }
    }
    const TraceReport r = validate_trace(bad);
    CHECK_FALSE(r.ok());
    REQUIRE_FALSE(r.findings.empty());
    CHECK(r.findings[0].line == 3);
}
