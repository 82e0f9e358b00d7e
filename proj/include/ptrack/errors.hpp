#pragma once

#include <stdexcept>
#include <string>

namespace ptrack {

// Bad configuration values or files (range violations, unknown kinds, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor / vector dimension mismatches.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Arguments outside an operation's domain (negative time, short windows...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite simulation state; the caller is expected to reset the episode.
struct SimDivergedError : std::runtime_error {
  explicit SimDivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or inconsistent checkpoint files.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ptrack
