// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace echo {

// Error taxonomy shared by the library and the CLI. The CLI maps these onto
// its exit-code contract: 2 config/validation, 3 IO, 4 numeric, 5 self-check.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad data fed to an operation (empty signal, out-of-range position, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or malformed configuration (shape mismatch, unknown key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse (mask length mismatch, empty train set, backward without record).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Filesystem / format failures. Carries the offending path when known.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (diverged training, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Checkpoint loading failures, kept distinct so callers can tell a stale
// format from a corrupted file.
class CheckpointError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kVersionMismatch,
    kShapeMismatch,
    kTruncated,
    kMissingTensor,
    kWrongKind
  };
  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace echo
