#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "sleepd/backend.hpp"

namespace sleepd {

// Deterministic scripted backend for tests and offline runs.
//
// A script is an ordered list of rules. Each rule has a matcher (substring
// of the last message, or of any message) and a FIFO queue of outputs.
// complete() routes a request to the first matching rule that still has
// outputs (exhausted rules are transparent) and pops sample_count of them.
// Usage is computed with count_tokens_proxy, so identical scripts and
// request sequences give identical responses and usage totals.
class MockBackend : public Backend {
 public:
  struct Matcher {
    enum class Scope { last_message, any_message };
    Scope scope = Scope::any_message;
    std::string needle;
  };

  struct ScriptedOutput {
    enum class Kind { text, text_truncated, tool_call, transport_error };
    Kind kind = Kind::text;
    std::string text;
    std::string tool_name;
    std::string arguments_json;
    std::uint64_t reasoning_tokens = 0;
    // Simulated latency, applied outside the mock's lock.
    std::uint32_t delay_ms = 0;

    static ScriptedOutput make_text(std::string text);
    static ScriptedOutput make_truncated_text(std::string text);
    static ScriptedOutput make_tool_call(std::string name,
                                         std::string arguments_json);
    static ScriptedOutput make_transport_error();
  };

  struct LogEntry {
    ChatRequest request;
    int matched_rule = -1;  // -1: no rule matched
    bool transport_error = false;
  };

  MockBackend() = default;

  // Appends outputs to the rule with this matcher, creating it at the end of
  // the rule list on first use. Rules are tried in creation order.
  void script(const Matcher& matcher, std::vector<ScriptedOutput> outputs);

  // Loads a line-delimited script: one output per line, keyed by
  // {"matcher_substring", "match_scope"?, "output_kind", "payload",
  //  "reasoning_tokens"?}. Lines with the same matcher accumulate FIFO.
  void load_script_file(const std::string& path);
  void load_script_text(const std::string& text, const std::string& origin);

  ChatResponse complete(const ChatRequest& request) override;

  std::vector<LogEntry> log() const;
  std::size_t request_count() const;
  // Outputs still queued across all rules.
  std::size_t pending_outputs() const;

 private:
  struct Rule {
    Matcher matcher;
    std::deque<ScriptedOutput> outputs;
  };

  ChatResponse complete_locked(const ChatRequest& request,
                               std::uint32_t* delay_ms);
  static bool matches(const Matcher& matcher, const ChatRequest& request);
  static Output to_output(const ScriptedOutput& scripted);
  static std::uint64_t completion_proxy(const ScriptedOutput& scripted);

  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::vector<LogEntry> log_;
};

}  // namespace sleepd
