#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sleepd/backend.hpp"
#include "sleepd/memory.hpp"

namespace sleepd {

struct SleepConfig {
  int max_rethink_calls = 10;
  int parallel_k = 1;
  std::optional<Effort> effort;
  std::string prompt_id = "default";
  std::optional<std::uint32_t> max_output_tokens;
  // In-flight run limit for run_sleep_parallel. 1 keeps runs sequential,
  // which preserves mock-script FIFO determinism.
  int concurrency = 1;
};

enum class SleepTermination {
  finished,      // the model called the finish tool
  cap_reached,   // max_rethink_calls applications hit
  stalled,       // two consecutive plain-text turns, partial value returned
  malformed,     // corrective re-prompt failed, partial value returned
};

const char* sleep_termination_name(SleepTermination t);
std::optional<SleepTermination> sleep_termination_from_name(
    const std::string& name);

struct SleepProvenance {
  SleepConfig config;
  int parallel_index = 0;
  Usage usage;  // every backend call of the run, summed
  SleepTermination termination = SleepTermination::finished;
  int applied_rethinks = 0;
};

struct DerivedContext {
  std::string context_id;  // content hash of the raw context
  std::string value;       // final rethink_memory_block content
  SleepProvenance provenance;
  std::int64_t created_at_ms = 0;
  std::vector<AuditRecord> audit;

  bool stalled() const {
    return provenance.termination == SleepTermination::stalled ||
           provenance.termination == SleepTermination::malformed;
  }
};

// Drives the rethink loop over a fresh MemoryState: persona/human/raw
// context as read-only blocks plus an initially empty rethink block. Applies
// each rethink tool call, stops at the first finish call or after
// max_rethink_calls applications, whichever comes first.
//
// Throws Error(BackendFailure) when the backend fails after retries. Stalls
// and malformed-call aborts are not errors: the partial value is returned
// with the corresponding termination flag.
DerivedContext run_sleep(const std::string& context, const SleepConfig& config,
                         Backend& backend, const RetryPolicy& retry = {});

struct SleepRunOutcome {
  int parallel_index = 0;
  std::optional<DerivedContext> derived;
  std::string error;  // empty on success

  bool ok() const { return derived.has_value(); }
};

// k independent run_sleep executions with independent memory states and
// usage. A failed run fills its slot's error without aborting siblings.
std::vector<SleepRunOutcome> run_sleep_parallel(const std::string& context,
                                                const SleepConfig& config,
                                                Backend& backend,
                                                const RetryPolicy& retry = {});

// Deterministic concatenation of sibling derivations in index order, each
// under a "=== derived context i of k ===" header. Parts must share one
// context_id (MixedContexts otherwise).
std::string concat_derived(const std::vector<DerivedContext>& parts);

}  // namespace sleepd
