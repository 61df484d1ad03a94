#pragma once

#include <stdexcept>
#include <string>

namespace emobridge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on caller-supplied data was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A file is malformed: bad magic, unsupported version, truncated record, bad CSV row.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A requested key (utterance id, parameter name, file) does not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared where finite ones are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration is invalid or inconsistent with recorded artifacts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An upstream pipeline stage has not produced its artifact yet.
class MissingArtifact : public Error {
 public:
  MissingArtifact(std::string stage, const std::string& what)
      : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace emobridge
