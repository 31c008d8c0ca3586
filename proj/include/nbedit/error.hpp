#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nbedit {

enum class ErrorCode {
  EmptyStatement,
  DuplicateId,
  DimensionMismatch,
  EmptyGold,
  MissingContext,
  UnexpectedContext,
  UnrecognizedPrompt,
  BackendTimeout,
  BackendError,
  OutOfRange,
  NoInScopeExamples,
  NoOutOfScopeExamples,
  IoError,
  SchemaError,
  CorruptLine,
  SeqGap,
  InvalidSize,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

// Base of every error thrown by the library. Callers that need to branch on
// the failure kind switch on code(); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Reader transport failures. Distinguished from data errors so the CLI can
// map them to a separate exit code.
class BackendFailure : public Error {
 public:
  BackendFailure(ErrorCode code, int status, std::string body, const std::string& message)
      : Error(code, message), status_(status), body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class SeqGapError : public Error {
 public:
  SeqGapError(std::size_t expected, std::size_t found)
      : Error(ErrorCode::SeqGap, "seq gap: expected " + std::to_string(expected) +
                                     ", found " + std::to_string(found)),
        expected_(expected),
        found_(found) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t expected_;
  std::size_t found_;
};

}  // namespace nbedit
