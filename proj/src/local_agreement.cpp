#include "simulu/local_agreement.hpp"

#include <algorithm>

namespace simulu {

Tokens longest_common_prefix(std::span<const std::string> a, std::span<const std::string> b) {
    const auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    (void)ib;
    return Tokens(a.begin(), ia);
}

LaStepResult LaSession::extend_with(std::span<const std::string> agreed) {
    LaStepResult result;
    const std::span<const std::string> committed(committed_);
    const auto consistent = std::mismatch(committed.begin(), committed.end(), agreed.begin(), agreed.end()).first;
    if (consistent != committed.end()) {
        // Either the agreement is shorter than what is committed (nothing new)
        // or it rewrites a committed token.
        const auto pos = static_cast<std::size_t>(consistent - committed.begin());
        result.diverged = pos < agreed.size();
        return result;
    }
    result.committed.assign(agreed.begin() + static_cast<std::ptrdiff_t>(committed_.size()), agreed.end());
    committed_.insert(committed_.end(), result.committed.begin(), result.committed.end());
    return result;
}

LaStepResult LaSession::step(Tokens new_hypothesis) {
    LaStepResult result;
    if (has_previous_) {
        const Tokens agreed = longest_common_prefix(previous_, new_hypothesis);
        result = extend_with(agreed);
        // Disagreeing with committed output is a divergence even when the
        // agreement with the previous decode stops before the committed end.
        const std::size_t same = longest_common_prefix(committed_, new_hypothesis).size();
        result.diverged = result.diverged || (same < committed_.size() && same < new_hypothesis.size());
    }
    previous_ = std::move(new_hypothesis);
    has_previous_ = true;
    return result;
}

LaStepResult LaSession::flush() {
    LaStepResult result = extend_with(previous_);
    previous_.clear();
    has_previous_ = false;
    return result;
}

} // namespace simulu
