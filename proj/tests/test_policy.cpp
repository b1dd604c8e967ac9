#include "scripted_adapter.hpp"

#include "simulu/errors.hpp"
#include "simulu/harness.hpp"
#include "simulu/oracle_adapter.hpp"
#include "simulu/scenario.hpp"
#include "simulu/simulu_policy.hpp"

#include <doctest.h>

using namespace simulu;

namespace {

AudioChunk half_second() {
    return AudioChunk::from_samples(std::vector<float>(8000, 0.0f), AdapterSpec{});
}

TranscribeResult words(const std::vector<std::string>& toks, const std::vector<std::int64_t>& align,
                       std::int64_t frames) {
    TranscribeResult tr;
    tr.new_tokens = toks;
    tr.word_start_flags.assign(toks.size(), true);
    tr.speech_text_attention = one_hot(align, frames);
    return tr;
}

} // namespace

TEST_CASE("session construction and state errors") {
    ScriptedAdapter adapter;
    StreamSession s(PolicyConfig{}, adapter);
    CHECK(s.text().empty());
    CHECK(s.speech().empty());
    CHECK(s.source_consumed() == 0.0);
    CHECK_THROWS_AS(s.step(), StateError);

    CHECK_THROWS_AS(StreamSession(PolicyConfig{4, 0, 0.5}, adapter), ConfigError);

    s.push_audio(half_second());
    CHECK(s.source_consumed() == doctest::Approx(0.5));
    s.push_audio(half_second());
    s.push_audio(half_second());
    CHECK(s.source_consumed() == doctest::Approx(1.5));
    CHECK(s.chunks_ingested() == 3);
}

TEST_CASE("finish on an empty session emits nothing; double finish is an error") {
    ScriptedAdapter adapter;
    StreamSession s(PolicyConfig{}, adapter);
    CHECK_FALSE(s.finish().has_value());
    CHECK_THROWS_AS(s.finish(), StateError);
    CHECK_THROWS_AS(s.push_audio(half_second()), StateError);
    CHECK_THROWS_AS(s.step(), StateError);
}

TEST_CASE("scripted two-step run: 8 units with 6 history units emit 640 samples") {
    ScriptedAdapter adapter;
    // Step 1, 25 frames, f=4: both tokens stable.
    adapter.transcripts.push_back(words({"il", "gatto"}, {3, 10}, 25));
    adapter.synths.push_back({2, units_for({0, 0, 0, 1, 1, 1}, 2)});
    // Step 2, 50 frames: "qui" at 48 sits in the unstable tail (46..49).
    adapter.transcripts.push_back(words({"dorme", "qui"}, {30, 48}, 50));
    adapter.synths.push_back({3, units_for({0, 0, 1, 1, 1, 1, 2, 2}, 3)});
    // Finish: everything is stable.
    adapter.transcripts.push_back(words({"qui"}, {48}, 50));
    adapter.synths.push_back({4, units_for({0, 1, 1, 2, 2, 2, 2, 3, 3}, 4)});

    StreamSession s(PolicyConfig{}, adapter);
    s.push_audio(half_second());
    auto e1 = s.step();
    REQUIRE(e1);
    CHECK(e1->new_tokens == std::vector<std::string>{"il", "gatto"});
    CHECK(e1->waveform.size() == 1920);
    CHECK(e1->source_consumed_at_emit == doctest::Approx(0.5));

    s.push_audio(half_second());
    auto e2 = s.step();
    REQUIRE(e2);
    CHECK(e2->new_tokens == std::vector<std::string>{"dorme"});
    CHECK(s.last_decision().hypothesis_tokens == 2);
    CHECK(s.last_decision().committed_tokens == 1);
    CHECK(s.last_decision().synthesized_units == 8);
    CHECK(s.last_decision().discarded_units == 6);
    CHECK(e2->waveform.size() == 640);
    // The emitted samples are those of units 6 and 7.
    CHECK(e2->waveform.front() == doctest::Approx(0.06f));
    CHECK(e2->waveform.back() == doctest::Approx(0.07f));

    auto e3 = s.finish();
    REQUIRE(e3);
    CHECK(e3->new_tokens == std::vector<std::string>{"qui"});
    CHECK(e3->waveform.size() == 2 * 320);
    CHECK(s.emitted_units_total() == 6 + 2 + 2);
    CHECK(adapter.seen_histories.back() == std::vector<std::string>{"il", "gatto", "dorme", "qui"});
}

TEST_CASE("fully unstable and empty hypotheses are no-ops") {
    ScriptedAdapter adapter;
    adapter.transcripts.push_back(words({"a", "b"}, {22, 24}, 25));
    adapter.transcripts.push_back(TranscribeResult{});
    StreamSession s(PolicyConfig{}, adapter);
    s.push_audio(half_second());
    CHECK_FALSE(s.step().has_value());
    CHECK(s.text().empty());
    s.push_audio(half_second());
    CHECK_FALSE(s.step().has_value());
    CHECK(adapter.synths.empty());
}

TEST_CASE("contract violations from the adapter") {
    SUBCASE("attention rows differ from the token count") {
        ScriptedAdapter adapter;
        TranscribeResult tr = words({"a", "b"}, {1, 2}, 25);
        tr.new_tokens.pop_back();
        tr.word_start_flags.pop_back();
        adapter.transcripts.push_back(tr);
        StreamSession s(PolicyConfig{}, adapter);
        s.push_audio(half_second());
        CHECK_THROWS_AS(s.step(), ContractViolation);
    }
    SUBCASE("attention columns differ from the frame count") {
        ScriptedAdapter adapter;
        adapter.transcripts.push_back(words({"a"}, {1}, 24));
        StreamSession s(PolicyConfig{}, adapter);
        s.push_audio(half_second());
        CHECK_THROWS_AS(s.step(), ContractViolation);
    }
    SUBCASE("unnormalized rows") {
        ScriptedAdapter adapter;
        TranscribeResult tr = words({"a"}, {1}, 25);
        tr.speech_text_attention(0, 2) = 0.5;
        adapter.transcripts.push_back(tr);
        StreamSession s(PolicyConfig{}, adapter);
        s.push_audio(half_second());
        CHECK_THROWS_AS(s.step(), ContractViolation);
    }
    SUBCASE("waveform not a multiple of the reduction rate") {
        ScriptedAdapter adapter;
        adapter.transcripts.push_back(words({"a"}, {1}, 25));
        SynthesisOutput bad = units_for({0, 0}, 1);
        bad.waveform.pop_back();
        adapter.synths.push_back({1, bad});
        StreamSession s(PolicyConfig{}, adapter);
        s.push_audio(half_second());
        CHECK_THROWS_AS(s.step(), ContractViolation);
    }
    SUBCASE("adapter errors propagate") {
        ScriptedAdapter adapter;
        StreamSession s(PolicyConfig{}, adapter);
        s.push_audio(half_second());
        CHECK_THROWS_AS(s.step(), AdapterError);
    }
}

TEST_CASE("twelve words with WH=10 drop the two oldest and cut speech") {
    ScriptedAdapter adapter;
    const std::vector<std::string> first{"w0", "w1", "w2", "w3", "w4", "w5"};
    const std::vector<std::string> second{"w6", "w7", "w8", "w9", "w10", "w11"};
    adapter.transcripts.push_back(words(first, {0, 3, 6, 9, 12, 15}, 25));
    adapter.synths.push_back({6, units_for({0, 1, 2, 3, 4, 5}, 6)});
    adapter.transcripts.push_back(words(second, {27, 30, 33, 36, 39, 42}, 50));
    // After the trim: 10 retained tokens, new ones start at index 4.
    adapter.synths.push_back({10, units_for({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 10)});

    StreamSession s(PolicyConfig{4, 10, 0.5}, adapter);
    s.push_audio(half_second());
    REQUIRE(s.step());
    s.push_audio(half_second());
    auto e = s.step();
    REQUIRE(e);
    CHECK(s.last_decision().discarded_tokens == 2);
    CHECK(s.text().word_count() == 10);
    CHECK(s.text().tokens().front() == "w2");
    // Discarded tokens sat at frames 0 and 3; the oldest retained one at 6.
    CHECK(s.last_decision().cut_frame == 4);
    CHECK(s.speech().discarded_frames() == 4);
    CHECK(s.speech().discarded_samples() == 1280);
    CHECK(s.text().frame_alignment().front() >= s.speech().discarded_frames());
    CHECK(e->waveform.size() == 6 * 320);
    CHECK(s.trim() == 0);
}

TEST_CASE("one step committing more words than WH synthesizes only the new tokens") {
    ScriptedAdapter adapter;
    adapter.transcripts.push_back(words({"a", "b", "c"}, {1, 5, 9}, 25));
    adapter.synths.push_back({3, units_for({0, 1, 1, 2}, 3)});
    StreamSession s(PolicyConfig{4, 2, 0.5}, adapter);
    s.push_audio(half_second());
    auto e = s.step();
    REQUIRE(e);
    CHECK(e->new_tokens.size() == 3);
    CHECK(e->waveform.size() == 4 * 320);
    CHECK(s.text().word_count() == 2);
    CHECK(s.speech().discarded_frames() == 2);
}

TEST_CASE("oracle stream: pending tail is emitted at finish and output is conserved") {
    OracleScript script;
    script.words = {{5, 20, {"il", "@gat"}, {2, 3}}, {22, 40, {"dorme"}, {4}}, {44, 50, {"qui"}, {2}}};
    OracleAdapter oracle(script);
    StreamSession s(PolicyConfig{4, 10, 0.5}, oracle);
    const std::vector<float> audio = render_script_audio(script, 1.0, oracle.spec());
    std::vector<float> out;
    std::vector<std::string> toks;
    for (const AudioChunk& c : split_into_chunks(audio, 0.5, oracle.spec())) {
        s.push_audio(c);
        if (auto e = s.step()) {
            out.insert(out.end(), e->waveform.begin(), e->waveform.end());
            toks.insert(toks.end(), e->new_tokens.begin(), e->new_tokens.end());
        }
    }
    // "qui" is centred at frame 46, inside the last 4 of 50 frames.
    CHECK(toks == std::vector<std::string>{"il", "@gat", "dorme"});
    auto tail = s.finish();
    REQUIRE(tail);
    CHECK(tail->new_tokens == std::vector<std::string>{"qui"});
    out.insert(out.end(), tail->waveform.begin(), tail->waveform.end());

    TextHistory full;
    for (const std::string& t : script.target_tokens()) {
        full.append(t, true, 0);
    }
    CHECK(out == oracle.synthesize(full).waveform);
    CHECK(static_cast<std::int64_t>(out.size()) == s.emitted_units_total() * 320);
}

TEST_CASE("conservation holds across generated scenarios and word histories") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Scenario sc = generate_scenario(seed, ScenarioGenOptions{5.0, 15.0, 0.05, 1.0});
        for (std::int64_t wh : {1, 3, 10}) {
            RunOptions opts;
            opts.config = PolicyConfig{4, wh, 0.5};
            opts.after_step = [wh](const StreamSession& s) {
                REQUIRE(s.text().word_count() <= static_cast<std::size_t>(wh));
                for (std::int64_t f : s.text().frame_alignment()) {
                    REQUIRE(f >= s.speech().discarded_frames());
                }
            };
            const SimulRunOutput run = run_scenario_simulu(sc, opts);
            OracleAdapter oracle(sc.script);
            TextHistory full;
            for (const std::string& t : committed_tokens(run.result)) {
                full.append(t, true, 0);
            }
            REQUIRE(committed_tokens(run.result) == sc.script.target_tokens());
            REQUIRE(run.waveform == oracle.synthesize(full).waveform);
        }
    }
}
