#pragma once

#include <span>
#include <string>
#include <vector>

namespace simulu {

using Tokens = std::vector<std::string>;

Tokens longest_common_prefix(std::span<const std::string> a, std::span<const std::string> b);

struct LaStepResult {
    Tokens committed;       // newly committed this step
    bool diverged = false;  // the new hypothesis contradicts already committed tokens
};

// LocalAgreement-2: a token is committed once two consecutive full decodes
// of the same segment agree on it. Commitments are never retracted.
class LaSession {
public:
    LaStepResult step(Tokens new_hypothesis);

    // End of segment: commits whatever of the last hypothesis extends the
    // committed prefix.
    LaStepResult flush();

    const Tokens& committed() const { return committed_; }
    const Tokens& previous_hypothesis() const { return previous_; }
    double source_consumed = 0.0;

private:
    LaStepResult extend_with(std::span<const std::string> agreed);

    Tokens previous_;
    Tokens committed_;
    bool has_previous_ = false;
};

} // namespace simulu
