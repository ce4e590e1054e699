#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sleepd/errors.hpp"

namespace sleepd {

enum class Role { system, user, assistant, tool };

const char* role_name(Role role);

struct Message {
  Role role = Role::user;
  std::string text;
};

enum class Effort { low, medium, high };

const char* effort_name(Effort effort);
std::optional<Effort> effort_from_name(const std::string& name);

struct ToolSignature {
  std::string name;
  std::string description;
  // JSON schema of the "parameters" object, serialized.
  std::string parameters_schema;
};

struct ChatRequest {
  std::vector<Message> messages;
  std::vector<ToolSignature> tools;
  std::optional<Effort> effort;
  std::optional<std::uint32_t> max_output_tokens;
  double temperature = 0.0;
  std::uint32_t sample_count = 1;
  // Set by the retry wrapper; 0 for a first attempt. Backends surface it in
  // their request logs so retried attempts are distinguishable.
  std::uint32_t attempt = 0;
};

struct ToolCall {
  std::string name;
  std::string arguments_json;  // serialized JSON object
};

struct Output {
  enum class Kind { text, tool_call };
  Kind kind = Kind::text;
  std::string text;
  ToolCall call;
  bool truncated = false;  // output hit the max_output_tokens cap
};

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  std::uint64_t reasoning_tokens = 0;

  Usage& operator+=(const Usage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    reasoning_tokens += other.reasoning_tokens;
    return *this;
  }
  friend Usage operator+(Usage a, const Usage& b) { return a += b; }
  friend bool operator==(const Usage& a, const Usage& b) {
    return a.prompt_tokens == b.prompt_tokens &&
           a.completion_tokens == b.completion_tokens &&
           a.reasoning_tokens == b.reasoning_tokens;
  }
};

struct ChatResponse {
  std::vector<Output> outputs;  // length == request.sample_count
  Usage usage;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Must be safe for concurrent calls. Throws Error with code
  // TransportError / MalformedResponse / BudgetRejected / ScriptExhausted.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Deterministic usage proxy for the mock: number of maximal
// whitespace-delimited chunks.
std::uint64_t count_tokens_proxy(std::string_view text);

struct RetryPolicy {
  std::uint32_t max_attempts = 3;  // total tries, including the first
  std::uint32_t base_delay_ms = 50;
  std::uint32_t max_delay_ms = 2000;
};

// Retries only on TransportError, with bounded exponential backoff.
// request.attempt is stamped before each try so backends can log retries
// distinctly. Rethrows the last TransportError when attempts run out.
ChatResponse complete_with_retries(Backend& backend, ChatRequest request,
                                   const RetryPolicy& policy = {});

}  // namespace sleepd
