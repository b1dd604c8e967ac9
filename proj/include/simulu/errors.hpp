#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simulu {

// Invalid PolicyConfig / AdapterSpec / VadConfig.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operation not allowed in the current session state (push after finish, ...).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// An adapter returned data that breaks the adapter contract
// (attention shape, normalization, waveform length).
struct ContractViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AdapterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Replay adapter was asked for something the trace did not record next.
struct TraceDesyncError : AdapterError {
    using AdapterError::AdapterError;
};

struct TraceParseError : std::runtime_error {
    TraceParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct TraceVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace simulu
