#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sleepd/sleep.hpp"

namespace sleepd {

enum class Selector { raw, latest_derived, derived_index, concat_all };

std::optional<Selector> selector_from_name(const std::string& name,
                                           int* index_out);

struct ContextSummary {
  std::string context_id;
  std::size_t raw_chars = 0;
  int derived_count = 0;
  std::vector<std::string> tags;  // sorted
};

// Versioned on-disk persistence for raw contexts and their derivations.
//
// Layout, one directory per context id:
//   <root>/<id>/raw.txt
//   <root>/<id>/derived/<index>.txt      (value)
//   <root>/<id>/derived/<index>.meta     (provenance JSON)
//   <root>/<id>/audit/<index>.jsonl      (rethink trail)
//   <root>/<id>/tags.txt
//
// Records appear atomically (write to a temp path, rename into place).
// Derived versions are append-only; nothing is rewritten or removed.
// Writers serialize per context via an in-process mutex plus an advisory
// file lock; readers never block.
class ContextStore {
 public:
  explicit ContextStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Idempotent: the id is the content hash, so identical bytes always map
  // to one record.
  std::string put_context(const std::string& raw);

  bool has_context(const std::string& context_id) const;
  int derived_count(const std::string& context_id) const;

  // Appends a derived version; returns its 0-based index.
  int attach_derived(const std::string& context_id,
                     const DerivedContext& derived);

  std::string resolve(const std::string& context_id, Selector selector,
                      int index = -1) const;

  DerivedContext read_derived(const std::string& context_id, int index) const;

  void add_tag(const std::string& context_id, const std::string& tag);
  ContextSummary summary(const std::string& context_id) const;
  std::vector<std::string> list_contexts() const;  // sorted ids

  // Line-delimited index of every record, for experiment sharing.
  std::string export_manifest() const;

 private:
  std::filesystem::path context_dir(const std::string& context_id) const;
  void require_context(const std::string& context_id) const;
  std::mutex& writer_mutex(const std::string& context_id);

  std::filesystem::path root_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> writer_mutexes_;
};

// Provenance (de)serialization for derived versions; shared with the
// service's metadata responses.
std::string derived_meta_to_json(const DerivedContext& derived);
DerivedContext derived_meta_from_json(const std::string& json_text);

}  // namespace sleepd
