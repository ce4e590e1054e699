#include "sleepd/store.hpp"

#include <sys/file.h>
#include <unistd.h>

#include <fcntl.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sleepd/hash.hpp"

namespace sleepd {

namespace fs = std::filesystem;

namespace {

// Advisory cross-process lock, held for the duration of a write.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0)
      throw Error(Errc::StorageFailure,
                  "cannot open lock file: " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(Errc::StorageFailure,
                  "cannot acquire lock: " + path.string());
    }
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::StorageFailure, "cannot read: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(Errc::StorageFailure, "cannot write: " + tmp.string());
    out << content;
    if (!out.flush())
      throw Error(Errc::StorageFailure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::StorageFailure, "rename failed for " + path.string());
  }
}

nlohmann::json usage_to_json(const Usage& usage) {
  return {{"prompt_tokens", usage.prompt_tokens},
          {"completion_tokens", usage.completion_tokens},
          {"reasoning_tokens", usage.reasoning_tokens}};
}

Usage usage_from_json(const nlohmann::json& j) {
  Usage usage;
  usage.prompt_tokens = j.value("prompt_tokens", std::uint64_t{0});
  usage.completion_tokens = j.value("completion_tokens", std::uint64_t{0});
  usage.reasoning_tokens = j.value("reasoning_tokens", std::uint64_t{0});
  return usage;
}

}  // namespace

std::optional<Selector> selector_from_name(const std::string& name,
                                           int* index_out) {
  if (name == "raw") return Selector::raw;
  if (name == "latest_derived") return Selector::latest_derived;
  if (name == "concat_all") return Selector::concat_all;
  const std::string prefix = "derived:";
  if (name.rfind(prefix, 0) == 0) {
    try {
      int index = std::stoi(name.substr(prefix.size()));
      if (index_out) *index_out = index;
      return Selector::derived_index;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string derived_meta_to_json(const DerivedContext& derived) {
  nlohmann::json j;
  j["context_id"] = derived.context_id;
  j["created_at_ms"] = derived.created_at_ms;
  nlohmann::json prov;
  prov["parallel_index"] = derived.provenance.parallel_index;
  prov["termination"] =
      sleep_termination_name(derived.provenance.termination);
  prov["applied_rethinks"] = derived.provenance.applied_rethinks;
  prov["usage"] = usage_to_json(derived.provenance.usage);
  nlohmann::json cfg;
  cfg["max_rethink_calls"] = derived.provenance.config.max_rethink_calls;
  cfg["parallel_k"] = derived.provenance.config.parallel_k;
  cfg["prompt_id"] = derived.provenance.config.prompt_id;
  if (derived.provenance.config.effort)
    cfg["effort"] = effort_name(*derived.provenance.config.effort);
  if (derived.provenance.config.max_output_tokens)
    cfg["max_output_tokens"] = *derived.provenance.config.max_output_tokens;
  prov["config"] = cfg;
  j["provenance"] = prov;
  return j.dump(2);
}

DerivedContext derived_meta_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  DerivedContext derived;
  derived.context_id = j.at("context_id").get<std::string>();
  derived.created_at_ms = j.value("created_at_ms", std::int64_t{0});
  const nlohmann::json& prov = j.at("provenance");
  derived.provenance.parallel_index = prov.value("parallel_index", 0);
  if (auto t = sleep_termination_from_name(
          prov.value("termination", std::string("finished"))))
    derived.provenance.termination = *t;
  derived.provenance.applied_rethinks = prov.value("applied_rethinks", 0);
  derived.provenance.usage = usage_from_json(prov.value("usage",
                                                        nlohmann::json{}));
  if (prov.contains("config")) {
    const nlohmann::json& cfg = prov["config"];
    derived.provenance.config.max_rethink_calls =
        cfg.value("max_rethink_calls", 10);
    derived.provenance.config.parallel_k = cfg.value("parallel_k", 1);
    derived.provenance.config.prompt_id =
        cfg.value("prompt_id", std::string("default"));
    if (cfg.contains("effort"))
      derived.provenance.config.effort =
          effort_from_name(cfg["effort"].get<std::string>());
    if (cfg.contains("max_output_tokens"))
      derived.provenance.config.max_output_tokens =
          cfg["max_output_tokens"].get<std::uint32_t>();
  }
  return derived;
}

ContextStore::ContextStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec && !fs::is_directory(root_))
    throw Error(Errc::StorageFailure,
                "cannot create store root: " + root_.string());
}

fs::path ContextStore::context_dir(const std::string& context_id) const {
  return root_ / context_id;
}

void ContextStore::require_context(const std::string& context_id) const {
  if (!has_context(context_id))
    throw Error(Errc::UnknownContext, "no such context: " + context_id);
}

std::mutex& ContextStore::writer_mutex(const std::string& context_id) {
  std::lock_guard<std::mutex> lock(map_mutex_);
  auto& slot = writer_mutexes_[context_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::string ContextStore::put_context(const std::string& raw) {
  if (raw.empty())
    throw Error(Errc::StorageFailure, "refusing to store an empty context");
  std::string id = sha256_hex(raw);
  fs::path dir = context_dir(id);
  if (fs::exists(dir / "raw.txt")) return id;

  std::lock_guard<std::mutex> lock(writer_mutex(id));
  if (fs::exists(dir / "raw.txt")) return id;
  FileLock file_lock(root_ / (id + ".lock"));

  // Stage the whole record, then rename the directory into place so the
  // record is either fully present or absent.
  static std::atomic<unsigned> counter{0};
  fs::path staging = root_ / (".tmp-" + id + "-" +
                              std::to_string(::getpid()) + "-" +
                              std::to_string(counter.fetch_add(1)));
  std::error_code ec;
  fs::create_directories(staging / "derived", ec);
  fs::create_directories(staging / "audit", ec);
  {
    std::ofstream out(staging / "raw.txt", std::ios::binary);
    if (!out) throw Error(Errc::StorageFailure, "cannot stage raw context");
    out << raw;
    if (!out.flush())
      throw Error(Errc::StorageFailure, "staging write failed");
  }
  fs::rename(staging, dir, ec);
  if (ec) {
    fs::remove_all(staging, ec);
    if (!fs::exists(dir / "raw.txt"))
      throw Error(Errc::StorageFailure, "cannot place context record " + id);
  }
  return id;
}

bool ContextStore::has_context(const std::string& context_id) const {
  return fs::exists(context_dir(context_id) / "raw.txt");
}

int ContextStore::derived_count(const std::string& context_id) const {
  require_context(context_id);
  fs::path dir = context_dir(context_id) / "derived";
  int count = 0;
  if (fs::exists(dir)) {
    while (fs::exists(dir / (std::to_string(count) + ".txt"))) ++count;
  }
  return count;
}

int ContextStore::attach_derived(const std::string& context_id,
                                 const DerivedContext& derived) {
  require_context(context_id);
  if (derived.context_id != context_id)
    throw Error(Errc::MismatchedId,
                "derived context carries id " + derived.context_id +
                    ", expected " + context_id);

  std::lock_guard<std::mutex> lock(writer_mutex(context_id));
  FileLock file_lock(root_ / (context_id + ".lock"));

  fs::path dir = context_dir(context_id);
  std::error_code ec;
  fs::create_directories(dir / "derived", ec);
  fs::create_directories(dir / "audit", ec);

  int index = 0;
  while (fs::exists(dir / "derived" / (std::to_string(index) + ".txt")))
    ++index;

  std::string base = std::to_string(index);
  // Meta and audit land before the value file: a visible <i>.txt implies a
  // complete version.
  write_file_atomic(dir / "derived" / (base + ".meta"),
                    derived_meta_to_json(derived));
  write_file_atomic(dir / "audit" / (base + ".jsonl"),
                    audit_to_jsonl(derived.audit));
  write_file_atomic(dir / "derived" / (base + ".txt"), derived.value);
  return index;
}

std::string ContextStore::resolve(const std::string& context_id,
                                  Selector selector, int index) const {
  require_context(context_id);
  fs::path dir = context_dir(context_id);
  switch (selector) {
    case Selector::raw:
      return read_file(dir / "raw.txt");
    case Selector::derived_index: {
      int count = derived_count(context_id);
      if (index < 0 || index >= count)
        throw Error(Errc::IndexOutOfRange,
                    "derived index " + std::to_string(index) +
                        " out of range (have " + std::to_string(count) + ")");
      return read_file(dir / "derived" / (std::to_string(index) + ".txt"));
    }
    case Selector::latest_derived: {
      int count = derived_count(context_id);
      if (count == 0)
        throw Error(Errc::NoDerived,
                    "context has no derived versions: " + context_id);
      return read_file(dir / "derived" /
                       (std::to_string(count - 1) + ".txt"));
    }
    case Selector::concat_all: {
      int count = derived_count(context_id);
      if (count == 0)
        throw Error(Errc::NoDerived,
                    "context has no derived versions: " + context_id);
      std::vector<DerivedContext> parts;
      parts.reserve(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        DerivedContext part;
        part.context_id = context_id;
        part.value = read_file(dir / "derived" / (std::to_string(i) + ".txt"));
        parts.push_back(std::move(part));
      }
      return concat_derived(parts);
    }
  }
  throw Error(Errc::StorageFailure, "unreachable selector");
}

DerivedContext ContextStore::read_derived(const std::string& context_id,
                                          int index) const {
  require_context(context_id);
  fs::path dir = context_dir(context_id);
  int count = derived_count(context_id);
  if (index < 0 || index >= count)
    throw Error(Errc::IndexOutOfRange,
                "derived index " + std::to_string(index) + " out of range");
  std::string base = std::to_string(index);
  DerivedContext derived =
      derived_meta_from_json(read_file(dir / "derived" / (base + ".meta")));
  derived.value = read_file(dir / "derived" / (base + ".txt"));
  fs::path audit_path = dir / "audit" / (base + ".jsonl");
  if (fs::exists(audit_path))
    derived.audit = audit_from_jsonl(read_file(audit_path));
  return derived;
}

void ContextStore::add_tag(const std::string& context_id,
                           const std::string& tag) {
  require_context(context_id);
  std::lock_guard<std::mutex> lock(writer_mutex(context_id));
  FileLock file_lock(root_ / (context_id + ".lock"));
  fs::path path = context_dir(context_id) / "tags.txt";
  std::vector<std::string> tags;
  if (fs::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) tags.push_back(line);
  }
  if (std::find(tags.begin(), tags.end(), tag) != tags.end()) return;
  tags.push_back(tag);
  std::sort(tags.begin(), tags.end());
  std::string content;
  for (const std::string& t : tags) content += t + "\n";
  write_file_atomic(path, content);
}

ContextSummary ContextStore::summary(const std::string& context_id) const {
  require_context(context_id);
  ContextSummary out;
  out.context_id = context_id;
  out.raw_chars = resolve(context_id, Selector::raw).size();
  out.derived_count = derived_count(context_id);
  fs::path tags_path = context_dir(context_id) / "tags.txt";
  if (fs::exists(tags_path)) {
    std::istringstream in(read_file(tags_path));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) out.tags.push_back(line);
  }
  return out;
}

std::vector<std::string> ContextStore::list_contexts() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_, ec)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    if (looks_like_context_id(name) && fs::exists(entry.path() / "raw.txt"))
      ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string ContextStore::export_manifest() const {
  std::ostringstream out;
  for (const std::string& id : list_contexts()) {
    ContextSummary s = summary(id);
    nlohmann::json j;
    j["context_id"] = s.context_id;
    j["raw_chars"] = s.raw_chars;
    j["derived_count"] = s.derived_count;
    j["tags"] = s.tags;
    nlohmann::json versions = nlohmann::json::array();
    for (int i = 0; i < s.derived_count; ++i) {
      DerivedContext d = read_derived(id, i);
      versions.push_back(
          {{"index", i},
           {"termination",
            sleep_termination_name(d.provenance.termination)},
           {"applied_rethinks", d.provenance.applied_rethinks},
           {"value_chars", d.value.size()}});
    }
    j["versions"] = versions;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace sleepd
