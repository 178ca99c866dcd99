#pragma once

#include <stdexcept>
#include <string>

namespace tsdm {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's precondition (bad k, too few items, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Unknown codec, bad level, malformed experiment spec.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Manifest or directory ingestion failed; the message names the entry.
class IngestionError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A quantity is mathematically undefined for the given input
/// ("degenerate pair", "zero rank variance", degenerate runtime fit).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsdm
