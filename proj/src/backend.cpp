#include "sleepd/backend.hpp"

#include <cctype>
#include <chrono>
#include <thread>

namespace sleepd {

const char* role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

const char* effort_name(Effort effort) {
  switch (effort) {
    case Effort::low: return "low";
    case Effort::medium: return "medium";
    case Effort::high: return "high";
  }
  return "medium";
}

std::optional<Effort> effort_from_name(const std::string& name) {
  if (name == "low") return Effort::low;
  if (name == "medium") return Effort::medium;
  if (name == "high") return Effort::high;
  return std::nullopt;
}

std::uint64_t count_tokens_proxy(std::string_view text) {
  std::uint64_t count = 0;
  bool in_chunk = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_chunk) ++count;
    in_chunk = !ws;
  }
  return count;
}

ChatResponse complete_with_retries(Backend& backend, ChatRequest request,
                                   const RetryPolicy& policy) {
  std::uint32_t attempts = policy.max_attempts == 0 ? 1 : policy.max_attempts;
  std::uint32_t delay = policy.base_delay_ms;
  for (std::uint32_t attempt = 0;; ++attempt) {
    request.attempt = attempt;
    try {
      return backend.complete(request);
    } catch (const Error& e) {
      if (e.code() != Errc::TransportError || attempt + 1 >= attempts) throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    delay = delay * 2 > policy.max_delay_ms ? policy.max_delay_ms : delay * 2;
  }
}

}  // namespace sleepd
