#include "simulu/metrics.hpp"

#include "simulu/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace simulu {

const char* const kMetricsCsvHeader =
    "policy,f,wh,segment_s,bleu,start_offset_s,end_offset_ms,end_offset_std_ms,runs";

namespace {

bool has_output(const EmissionRecord& r, bool text_only) {
    return text_only ? !r.tokens.empty() : r.target_samples > 0;
}

// Clipped n-gram matches and total hypothesis n-grams of order n.
std::pair<std::size_t, std::size_t> ngram_stats(const Tokens& hyp, const Tokens& ref, std::size_t n) {
    if (hyp.size() < n) {
        return {0, 0};
    }
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        ++ref_counts[std::vector<std::string>(ref.begin() + static_cast<std::ptrdiff_t>(i),
                                              ref.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    std::map<std::vector<std::string>, std::size_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
        ++hyp_counts[std::vector<std::string>(hyp.begin() + static_cast<std::ptrdiff_t>(i),
                                              hyp.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    std::size_t matches = 0;
    for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
            matches += std::min(count, it->second);
        }
    }
    return {matches, hyp.size() - n + 1};
}

std::string format_number(double v, int precision) { return fmt::format("{:.{}f}", v, precision); }

} // namespace

std::optional<double> start_offset(const RunResult& run) {
    std::optional<double> best;
    for (const EmissionRecord& r : run.emissions) {
        if (has_output(r, run.text_only) && (!best || r.source_consumed_at_emit < *best)) {
            best = r.source_consumed_at_emit;
        }
    }
    return best;
}

double end_offset_ms(const RunResult& run) {
    if (!run.finished || run.emissions.empty()) {
        throw StateError("end offset needs a finished run with a final output event");
    }
    double delay_ms = 0.0;
    for (const EmissionRecord& r : run.emissions) {
        delay_ms += r.compute_delay * 1000.0;
    }
    return (run.emissions.back().source_consumed_at_emit - run.source_duration) * 1000.0 + delay_ms;
}

Tokens committed_tokens(const RunResult& run) {
    Tokens out;
    for (const EmissionRecord& r : run.emissions) {
        out.insert(out.end(), r.tokens.begin(), r.tokens.end());
    }
    return out;
}

double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
    if (hypotheses.empty()) {
        throw std::invalid_argument("corpus_bleu: empty corpus");
    }
    if (hypotheses.size() != references.size()) {
        throw std::invalid_argument("corpus_bleu: hypothesis and reference counts differ");
    }
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    for (std::size_t d = 0; d < hypotheses.size(); ++d) {
        hyp_len += hypotheses[d].size();
        ref_len += references[d].size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto [m, t] = ngram_stats(hypotheses[d], references[d], n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    double log_precision = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (matches[n] == 0 || totals[n] == 0) {
            return 0.0;
        }
        log_precision += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
    }
    const double bp =
        hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)) : 1.0;
    return 100.0 * bp * std::exp(log_precision / 4.0);
}

std::vector<AggregateRow> aggregate(std::span<const RunResult> runs) {
    using Key = std::tuple<std::string, std::int64_t, std::int64_t, double>;
    std::map<Key, std::vector<const RunResult*>> cells;
    for (const RunResult& r : runs) {
        cells[{r.policy, r.config.cutoff_frames, r.config.word_history, r.config.segment_size}].push_back(&r);
    }

    std::vector<AggregateRow> rows;
    for (const auto& [key, members] : cells) {
        AggregateRow row;
        std::tie(row.policy, row.cutoff_frames, row.word_history, row.segment_size) = key;
        row.runs = members.size();

        std::vector<Tokens> hyps;
        std::vector<Tokens> refs;
        double start_sum = 0.0;
        std::size_t start_n = 0;
        std::vector<double> ends;
        for (const RunResult* r : members) {
            hyps.push_back(committed_tokens(*r));
            refs.push_back(r->reference);
            if (auto s = start_offset(*r); s && *s >= 0.0) {
                start_sum += *s;
                ++start_n;
            }
            ends.push_back(end_offset_ms(*r));
        }
        row.bleu = corpus_bleu(hyps, refs);
        if (start_n > 0) {
            row.start_offset_mean = start_sum / static_cast<double>(start_n);
        }
        double mean = 0.0;
        for (double e : ends) {
            mean += e;
        }
        mean /= static_cast<double>(ends.size());
        double var = 0.0;
        for (double e : ends) {
            var += (e - mean) * (e - mean);
        }
        row.end_offset_mean_ms = mean;
        row.end_offset_std_ms = std::sqrt(var / static_cast<double>(ends.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string to_csv_row(const AggregateRow& row) {
    const bool text_policy = row.policy == "local-agreement";
    std::string out = csv_field(row.policy);
    out += ',';
    out += text_policy ? "" : std::to_string(row.cutoff_frames);
    out += ',';
    out += text_policy ? "" : std::to_string(row.word_history);
    out += ',' + format_number(row.segment_size, 3);
    out += ',' + format_number(row.bleu, 4);
    out += ',' + (row.start_offset_mean ? format_number(*row.start_offset_mean, 4) : std::string());
    out += ',' + format_number(row.end_offset_mean_ms, 3);
    out += ',' + format_number(row.end_offset_std_ms, 3);
    out += ',' + std::to_string(row.runs);
    return out;
}

void write_metrics_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << kMetricsCsvHeader << "\r\n";
    for (const AggregateRow& row : rows) {
        out << to_csv_row(row) << "\r\n";
    }
}

} // namespace simulu
