#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sleepd/errors.hpp"

namespace sleepd {

// Well-known block labels used by the offline rethink loop.
inline constexpr const char* kPersonaLabel = "persona";
inline constexpr const char* kHumanLabel = "human";
inline constexpr const char* kRawContextLabel = "raw_context";
inline constexpr const char* kRethinkBlockLabel = "rethink_memory_block";

struct MemoryBlock {
  std::string label;
  std::string value;
  bool read_only = false;
  std::optional<std::size_t> char_limit;
};

struct RethinkCall {
  std::string new_memory;
  std::string target_label;
  std::optional<std::string> source_label;
  int step_index = 1;
};

// Labeled-block memory. Value type: operations return updated copies, so a
// state never mutates under a caller's feet and snapshots are free.
class MemoryState {
 public:
  MemoryState() = default;

  // Throws Error(UnknownLabel) on duplicate label.
  void add_block(MemoryBlock block);

  bool has_block(const std::string& label) const;
  const MemoryBlock& block(const std::string& label) const;  // UnknownLabel
  std::vector<std::string> labels() const;                   // sorted

  int rethink_count() const { return rethink_count_; }
  bool finished() const { return finished_; }

  friend MemoryState apply_rethink(const MemoryState& state,
                                   const RethinkCall& call);
  friend MemoryState apply_finish(const MemoryState& state);
  friend bool operator==(const MemoryState& a, const MemoryState& b);

 private:
  std::map<std::string, MemoryBlock> blocks_;
  int rethink_count_ = 0;
  bool finished_ = false;
};

// Replaces the target block's value wholesale, creating the block when it
// does not exist. The source label is recorded by callers for the audit
// trail but never validated or read here.
//
// Errors: FinishedState, EmptyTarget, ReadOnlyViolation, LimitExceeded.
MemoryState apply_rethink(const MemoryState& state, const RethinkCall& call);

// Marks the state finished; no block changes. Errors: FinishedState when
// already finished.
MemoryState apply_finish(const MemoryState& state);

// Deterministic concatenation of the named blocks, one "[memory block: X]"
// header per block. Errors: UnknownLabel.
std::string render_memory(const MemoryState& state,
                          const std::vector<std::string>& order);

bool operator==(const MemoryState& a, const MemoryState& b);

// One audit record per applied rethink. timestamp_ms is wall-clock at apply
// time; everything else comes from the call verbatim.
struct AuditRecord {
  int step_index = 0;
  std::string target_label;
  std::optional<std::string> source_label;
  std::string value;
  std::int64_t timestamp_ms = 0;
};

std::string audit_to_jsonl(const std::vector<AuditRecord>& trail);
std::vector<AuditRecord> audit_from_jsonl(const std::string& text);

}  // namespace sleepd
