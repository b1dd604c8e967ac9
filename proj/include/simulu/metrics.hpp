#pragma once

#include "simulu/timeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace simulu {

using Tokens = std::vector<std::string>;

struct EmissionRecord {
    double source_consumed_at_emit = 0.0; // seconds of source read when emitted
    std::int64_t target_samples = 0;
    Tokens tokens;
    double compute_delay = 0.0; // injected delay of the steps since the previous record, seconds
};

struct RunResult {
    std::string policy = "simulu";
    PolicyConfig config;
    std::vector<EmissionRecord> emissions; // the last record is the end-of-stream flush
    double source_duration = 0.0;
    Tokens reference;
    bool finished = true;
    bool text_only = false; // output is text (no waveform), e.g. LocalAgreement
};

// Source seconds read before the first non-empty output; nullopt without output.
std::optional<double> start_offset(const RunResult& run);

// Delay between the end of the source and the final output event, in ms.
// Event timestamps are source time plus the compute delay accumulated so far.
// Throws StateError for unfinished or empty runs.
double end_offset_ms(const RunResult& run);

// All tokens committed over a run, in order.
Tokens committed_tokens(const RunResult& run);

// Corpus BLEU-4 (no smoothing) on whitespace tokens, in [0, 100].
// Throws std::invalid_argument on an empty corpus or mismatched sizes.
double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references);

struct AggregateRow {
    std::string policy;
    std::int64_t cutoff_frames = 0;
    std::int64_t word_history = 0;
    double segment_size = 0.0;
    double bleu = 0.0;
    std::optional<double> start_offset_mean; // negative offsets excluded
    double end_offset_mean_ms = 0.0;
    double end_offset_std_ms = 0.0; // population std
    std::size_t runs = 0;
};

// One row per (policy, f, WH, segment size) cell, ordered by that key.
std::vector<AggregateRow> aggregate(std::span<const RunResult> runs);

extern const char* const kMetricsCsvHeader;

std::string csv_field(const std::string& value);
std::string to_csv_row(const AggregateRow& row);
void write_metrics_csv(std::ostream& out, std::span<const AggregateRow> rows);

} // namespace simulu
