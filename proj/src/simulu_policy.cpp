#include "simulu/simulu_policy.hpp"

#include "simulu/alignment.hpp"
#include "simulu/errors.hpp"

#include <algorithm>
#include <string>

namespace simulu {

namespace {

AdapterSpec checked_spec(const PolicyConfig& config, const ModelAdapter& adapter) {
    config.validate();
    AdapterSpec spec = adapter.spec();
    spec.validate();
    return spec;
}

void check_transcription(const TranscribeResult& tr, std::int64_t frames) {
    const auto tokens = static_cast<Eigen::Index>(tr.new_tokens.size());
    if (tr.word_start_flags.size() != tr.new_tokens.size()) {
        throw ContractViolation("transcribe: word-start flags do not match token count");
    }
    if (tokens == 0) {
        return;
    }
    if (tr.speech_text_attention.rows() != tokens || tr.speech_text_attention.cols() != frames) {
        throw ContractViolation("transcribe: attention is " + std::to_string(tr.speech_text_attention.rows()) + "x" +
                                std::to_string(tr.speech_text_attention.cols()) + ", expected " +
                                std::to_string(tokens) + "x" + std::to_string(frames));
    }
    validate_attention(tr.speech_text_attention);
}

void check_synthesis(const SynthesisOutput& out, std::size_t history_tokens, std::int64_t reduction_rate) {
    const auto units = static_cast<Eigen::Index>(out.units.size());
    if (out.text_unit_attention.rows() != units ||
        (units > 0 && out.text_unit_attention.cols() != static_cast<Eigen::Index>(history_tokens))) {
        throw ContractViolation("synthesize: text-unit attention shape does not match units x history tokens");
    }
    if (static_cast<std::int64_t>(out.waveform.size()) != units * reduction_rate) {
        throw ContractViolation("synthesize: waveform length " + std::to_string(out.waveform.size()) +
                                " != units * reduction_rate");
    }
    validate_attention(out.text_unit_attention);
}

} // namespace

StreamSession::StreamSession(PolicyConfig config, ModelAdapter& adapter)
    : config_(config), adapter_(&adapter), spec_(checked_spec(config, adapter)), speech_(spec_) {}

void StreamSession::push_audio(const AudioChunk& chunk) {
    if (finished_) {
        throw StateError("push_audio after finish");
    }
    chunk.validate(spec_);
    speech_.append(chunk);
    source_consumed_ += chunk.duration;
    ++chunks_ingested_;
}

std::optional<Emission> StreamSession::step() {
    if (finished_) {
        throw StateError("step after finish");
    }
    if (chunks_ingested_ == 0) {
        throw StateError("step before any audio was pushed");
    }
    return run_step(config_.cutoff_frames);
}

std::optional<Emission> StreamSession::finish() {
    if (finished_) {
        throw StateError("finish called twice");
    }
    std::optional<Emission> out;
    if (chunks_ingested_ > 0) {
        out = run_step(0);
    }
    finished_ = true;
    return out;
}

std::size_t StreamSession::trim() {
    const std::size_t cut_index = text_.word_cut_index(static_cast<std::size_t>(config_.word_history));
    if (cut_index == 0) {
        return 0;
    }
    const std::int64_t cut_frame =
        std::max(history_cut_frame(text_.frame_alignment(), cut_index), speech_.discarded_frames());
    speech_.trim_front(std::min(cut_frame, speech_.end_frame()));
    text_.drop_front(cut_index);
    last_.cut_frame = speech_.discarded_frames();
    return cut_index;
}

std::optional<Emission> StreamSession::run_step(std::int64_t cutoff) {
    last_ = StepDecision{};
    const std::int64_t frames = speech_.buffer_frames();

    TranscribeResult tr = adapter_->transcribe(speech_, text_);
    check_transcription(tr, frames);
    last_.hypothesis_tokens = tr.new_tokens.size();

    const AlignmentVector align = row_argmax(tr.speech_text_attention);
    const std::size_t stable = stable_prefix_len(align, frames, cutoff);
    if (stable == 0) {
        return std::nullopt;
    }
    last_.committed_tokens = stable;

    const std::size_t first_new = text_.size();
    for (std::size_t i = 0; i < stable; ++i) {
        text_.append(std::move(tr.new_tokens[i]), tr.word_start_flags[i], align[i] + speech_.discarded_frames());
    }
    TextHistory fresh = text_.suffix(first_new);

    const std::size_t discarded = trim();
    last_.discarded_tokens = discarded;

    // Synthesis is conditioned on the whole retained history. If a single step
    // committed more than WH words the trimmed history no longer holds all new
    // tokens; fall back to synthesizing exactly the new ones.
    const bool history_holds_new = discarded <= first_new;
    const TextHistory& context = history_holds_new ? text_ : fresh;
    const auto first_new_token = static_cast<std::int64_t>(history_holds_new ? first_new - discarded : 0);

    SynthesisOutput synth = adapter_->synthesize(context);
    check_synthesis(synth, context.size(), spec_.reduction_rate);

    const AlignmentVector unit_align = row_argmax(synth.text_unit_attention);
    const std::size_t drop_units = unit_history_boundary(unit_align, first_new_token);
    last_.synthesized_units = synth.units.size();
    last_.discarded_units = drop_units;

    Emission emission;
    emission.new_tokens = fresh.tokens();
    emission.waveform.assign(synth.waveform.begin() + static_cast<std::ptrdiff_t>(drop_units) * spec_.reduction_rate,
                             synth.waveform.end());
    emission.source_consumed_at_emit = source_consumed_;
    emitted_units_total_ += static_cast<std::int64_t>(synth.units.size() - drop_units);
    return emission;
}

} // namespace simulu
