#pragma once

#include <stdexcept>
#include <string>

namespace cfcal {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// A command that would leave the arm's safety envelope.
struct SafetyViolation : Error {
  using Error::Error;
};

// Point sets or design matrices that cannot determine a unique fit.
struct DegenerateInput : Error {
  using Error::Error;
};

struct NumericFailure : Error {
  using Error::Error;
};

struct EmptyDataset : Error {
  using Error::Error;
};

// Errors raised while reading persisted artifacts.
struct FormatError : Error {
  enum class Kind { Version, Truncated, NonNumeric, Malformed };
  FormatError(Kind kind, const std::string& what) : Error(what), kind(kind) {}
  Kind kind;
};

struct ConfigError : Error {
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  int line;
};

// A pipeline stage was asked to run before the stage producing its inputs.
struct MissingArtifact : Error {
  MissingArtifact(std::string stage, const std::string& what)
      : Error(what), stage(std::move(stage)) {}
  std::string stage;
};

}  // namespace cfcal
