#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace simulu {

// Committed target tokens still kept as decoding/synthesis context.
//
// Tokens carry a word-start flag and the absolute encoder frame they were
// aligned to when committed (not necessarily monotone). `dropped_tokens`
// counts tokens discarded from the front since stream start, so token i has
// stream-global index dropped_tokens() + i.
class TextHistory {
public:
    TextHistory() = default;
    explicit TextHistory(std::size_t dropped_tokens) : dropped_tokens_(dropped_tokens) {}

    void append(std::string token, bool word_start, std::int64_t frame);

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    std::size_t word_count() const;
    std::size_t dropped_tokens() const { return dropped_tokens_; }

    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<bool>& word_starts() const { return word_starts_; }
    std::span<const std::int64_t> frame_alignment() const { return frames_; }

    // Token index at which to cut so that exactly `max_words` words remain,
    // or 0 when the history already fits. Always a word start.
    std::size_t word_cut_index(std::size_t max_words) const;

    void drop_front(std::size_t count);

    // Tokens [from, size()) as a standalone history with the right global offset.
    TextHistory suffix(std::size_t from) const;

private:
    std::vector<std::string> tokens_;
    std::vector<bool> word_starts_;
    std::vector<std::int64_t> frames_;
    std::size_t dropped_tokens_ = 0;
};

} // namespace simulu
