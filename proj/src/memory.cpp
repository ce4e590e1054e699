#include "sleepd/memory.hpp"

#include <sstream>

#include <json.hpp>

namespace sleepd {

void MemoryState::add_block(MemoryBlock block) {
  if (block.label.empty())
    throw Error(Errc::EmptyTarget, "block label must be nonempty");
  if (blocks_.count(block.label))
    throw Error(Errc::ConfigError, "duplicate block label: " + block.label);
  if (block.char_limit && block.value.size() > *block.char_limit)
    throw Error(Errc::LimitExceeded, "initial value exceeds char_limit of " +
                                         block.label);
  blocks_.emplace(block.label, std::move(block));
}

bool MemoryState::has_block(const std::string& label) const {
  return blocks_.count(label) != 0;
}

const MemoryBlock& MemoryState::block(const std::string& label) const {
  auto it = blocks_.find(label);
  if (it == blocks_.end())
    throw Error(Errc::UnknownLabel, "no such block: " + label);
  return it->second;
}

std::vector<std::string> MemoryState::labels() const {
  std::vector<std::string> out;
  out.reserve(blocks_.size());
  for (const auto& [label, _] : blocks_) out.push_back(label);
  return out;
}

MemoryState apply_rethink(const MemoryState& state, const RethinkCall& call) {
  if (state.finished_)
    throw Error(Errc::FinishedState, "state is finished; rethink rejected");
  if (call.target_label.empty())
    throw Error(Errc::EmptyTarget, "rethink requires a target block label");

  MemoryState next = state;
  auto it = next.blocks_.find(call.target_label);
  if (it == next.blocks_.end()) {
    // Create-if-absent, then set: a single atomic write.
    MemoryBlock block;
    block.label = call.target_label;
    block.value = call.new_memory;
    next.blocks_.emplace(call.target_label, std::move(block));
  } else {
    if (it->second.read_only)
      throw Error(Errc::ReadOnlyViolation,
                  "block is read-only: " + call.target_label);
    if (it->second.char_limit &&
        call.new_memory.size() > *it->second.char_limit)
      throw Error(Errc::LimitExceeded,
                  "value exceeds char_limit of " + call.target_label);
    it->second.value = call.new_memory;
  }
  next.rethink_count_ = state.rethink_count_ + 1;
  return next;
}

MemoryState apply_finish(const MemoryState& state) {
  if (state.finished_)
    throw Error(Errc::FinishedState, "state is already finished");
  MemoryState next = state;
  next.finished_ = true;
  return next;
}

std::string render_memory(const MemoryState& state,
                          const std::vector<std::string>& order) {
  std::ostringstream out;
  bool first = true;
  for (const std::string& label : order) {
    const MemoryBlock& block = state.block(label);
    if (!first) out << "\n";
    first = false;
    out << "[memory block: " << label;
    if (block.read_only) out << " (read-only)";
    out << "]\n" << block.value << "\n";
  }
  return out.str();
}

bool operator==(const MemoryState& a, const MemoryState& b) {
  if (a.rethink_count_ != b.rethink_count_ || a.finished_ != b.finished_)
    return false;
  if (a.blocks_.size() != b.blocks_.size()) return false;
  for (const auto& [label, block] : a.blocks_) {
    auto it = b.blocks_.find(label);
    if (it == b.blocks_.end()) return false;
    if (it->second.value != block.value ||
        it->second.read_only != block.read_only)
      return false;
  }
  return true;
}

std::string audit_to_jsonl(const std::vector<AuditRecord>& trail) {
  std::ostringstream out;
  for (const AuditRecord& rec : trail) {
    nlohmann::json j;
    j["step_index"] = rec.step_index;
    j["target"] = rec.target_label;
    if (rec.source_label)
      j["source"] = *rec.source_label;
    else
      j["source"] = nullptr;
    j["value"] = rec.value;
    j["timestamp_ms"] = rec.timestamp_ms;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<AuditRecord> audit_from_jsonl(const std::string& text) {
  std::vector<AuditRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    AuditRecord rec;
    rec.step_index = j.at("step_index").get<int>();
    rec.target_label = j.at("target").get<std::string>();
    if (!j.at("source").is_null())
      rec.source_label = j.at("source").get<std::string>();
    rec.value = j.at("value").get<std::string>();
    rec.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace sleepd
