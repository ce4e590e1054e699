#pragma once

#include <stdexcept>
#include <string>

namespace sleepd {

// One code per failure mode surfaced by the public API. Callers that need to
// react programmatically switch on code(); everything else just propagates.
enum class Errc {
  // memory
  FinishedState,
  ReadOnlyViolation,
  EmptyTarget,
  LimitExceeded,
  UnknownLabel,
  // backend
  TransportError,
  MalformedResponse,
  BudgetRejected,
  ScriptExhausted,
  // orchestrators
  BackendFailure,
  NoAnswer,
  MixedContexts,
  // store
  StorageFailure,
  UnknownContext,
  MismatchedId,
  NoDerived,
  IndexOutOfRange,
  // datasets
  NoStatement,
  SchemaViolation,
  DuplicateId,
  ParseFailure,
  MissingScore,
  EmptyTruth,
  // evaluation
  ZeroQueries,
  EmptyGroup,
  MissingBin,
  IoFailure,
  // interface
  ConfigError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace sleepd
