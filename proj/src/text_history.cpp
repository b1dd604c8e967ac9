#include "simulu/text_history.hpp"

#include <algorithm>

namespace simulu {

void TextHistory::append(std::string token, bool word_start, std::int64_t frame) {
    tokens_.push_back(std::move(token));
    word_starts_.push_back(word_start);
    frames_.push_back(frame);
}

std::size_t TextHistory::word_count() const {
    return static_cast<std::size_t>(std::count(word_starts_.begin(), word_starts_.end(), true));
}

std::size_t TextHistory::word_cut_index(std::size_t max_words) const {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < word_starts_.size(); ++i) {
        if (word_starts_[i]) {
            starts.push_back(i);
        }
    }
    if (starts.size() <= max_words) {
        return 0;
    }
    // Leading tokens without a word start belong to the first (oldest) word.
    return starts[starts.size() - max_words];
}

void TextHistory::drop_front(std::size_t count) {
    count = std::min(count, tokens_.size());
    const auto n = static_cast<std::ptrdiff_t>(count);
    tokens_.erase(tokens_.begin(), tokens_.begin() + n);
    word_starts_.erase(word_starts_.begin(), word_starts_.begin() + n);
    frames_.erase(frames_.begin(), frames_.begin() + n);
    dropped_tokens_ += count;
}

TextHistory TextHistory::suffix(std::size_t from) const {
    TextHistory out(dropped_tokens_ + from);
    for (std::size_t i = from; i < tokens_.size(); ++i) {
        out.append(tokens_[i], word_starts_[i], frames_[i]);
    }
    return out;
}

} // namespace simulu
