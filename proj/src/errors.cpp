#include "sleepd/errors.hpp"

namespace sleepd {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::FinishedState: return "FinishedState";
    case Errc::ReadOnlyViolation: return "ReadOnlyViolation";
    case Errc::EmptyTarget: return "EmptyTarget";
    case Errc::LimitExceeded: return "LimitExceeded";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::TransportError: return "TransportError";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::BudgetRejected: return "BudgetRejected";
    case Errc::ScriptExhausted: return "ScriptExhausted";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::NoAnswer: return "NoAnswer";
    case Errc::MixedContexts: return "MixedContexts";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::UnknownContext: return "UnknownContext";
    case Errc::MismatchedId: return "MismatchedId";
    case Errc::NoDerived: return "NoDerived";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NoStatement: return "NoStatement";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::MissingScore: return "MissingScore";
    case Errc::EmptyTruth: return "EmptyTruth";
    case Errc::ZeroQueries: return "ZeroQueries";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::MissingBin: return "MissingBin";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace sleepd
