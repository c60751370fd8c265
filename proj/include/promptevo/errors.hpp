#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace promptevo {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Embedding space
class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

// Metrics and general argument validation
class InputError : public Error {
 public:
  using Error::Error;
};

// Oracle gateway
class TemplateError : public Error {
 public:
  using Error::Error;
};

class OrderError : public Error {
 public:
  using Error::Error;
};

class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class PromptTooLarge : public Error {
 public:
  using Error::Error;
};

/// Thrown by an endpoint for a failure worth retrying (timeouts, 5xx, refused connections).
class TransientOracleError : public Error {
 public:
  using Error::Error;
};

class FixtureExhausted : public Error {
 public:
  using Error::Error;
};

/// Oracle output could not be turned into the requested structure. Carries the raw text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_text() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class CoverageError : public ParseError {
 public:
  CoverageError(std::vector<std::size_t> missing, std::string raw);
  /// 0-based indices that no group mentioned.
  const std::vector<std::size_t>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::size_t> missing_;
};

class DuplicateIndexError : public ParseError {
 public:
  DuplicateIndexError(std::size_t index, std::string raw)
      : ParseError("index " + std::to_string(index + 1) + " appears in more than one group",
                   std::move(raw)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Evolution
class InitializationError : public Error {
 public:
  using Error::Error;
};

class EmptyBufferError : public Error {
 public:
  using Error::Error;
};

// Analysis
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Configuration and run orchestration
class ConfigError : public Error {
 public:
  ConfigError(std::vector<std::string> fields, const std::string& what)
      : Error(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

}  // namespace promptevo
