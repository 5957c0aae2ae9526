#pragma once

#include <stdexcept>
#include <string>

namespace ccoach {

/// Base for every error the tool reports to the user.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NoPriorError : public Error {
 public:
  NoPriorError() : Error("no recent error to explain") {}
};

class CompilerNotFound : public Error {
 public:
  using Error::Error;
};

class SourceMissing : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class RuleTableError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class CorruptStore : public Error {
 public:
  using Error::Error;
};

class EmptyContext : public Error {
 public:
  EmptyContext() : Error("error context is empty") {}
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

/// The completion stream ended before its terminal sentinel. The text
/// received so far is kept.
class StreamInterrupted : public Error {
 public:
  StreamInterrupted(const std::string& what, std::string partial)
      : Error(what), partial_text_(std::move(partial)) {}

  const std::string& partial_text() const noexcept { return partial_text_; }

 private:
  std::string partial_text_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class NoOverlap : public Error {
 public:
  using Error::Error;
};

class InsufficientPairs : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccoach
