#pragma once

#include <stdexcept>
#include <string>

namespace sparseff {

/// Malformed or unreadable input data (files, matrices, detections).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration or command-line usage.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A pipeline stage failed; carries the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause, bool input_related)
        : std::runtime_error(stage + ": " + cause),
          stage_(std::move(stage)),
          input_related_(input_related) {}

    const std::string& stage() const noexcept { return stage_; }
    bool input_related() const noexcept { return input_related_; }

private:
    std::string stage_;
    bool input_related_;
};

}  // namespace sparseff
