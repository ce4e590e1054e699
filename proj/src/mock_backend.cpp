#include "sleepd/mock_backend.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sleepd {

using ScriptedOutput = MockBackend::ScriptedOutput;

ScriptedOutput ScriptedOutput::make_text(std::string text) {
  ScriptedOutput out;
  out.kind = Kind::text;
  out.text = std::move(text);
  return out;
}

ScriptedOutput ScriptedOutput::make_truncated_text(std::string text) {
  ScriptedOutput out;
  out.kind = Kind::text_truncated;
  out.text = std::move(text);
  return out;
}

ScriptedOutput ScriptedOutput::make_tool_call(std::string name,
                                              std::string arguments_json) {
  ScriptedOutput out;
  out.kind = Kind::tool_call;
  out.tool_name = std::move(name);
  out.arguments_json = std::move(arguments_json);
  return out;
}

ScriptedOutput ScriptedOutput::make_transport_error() {
  ScriptedOutput out;
  out.kind = Kind::transport_error;
  return out;
}

void MockBackend::script(const Matcher& matcher,
                         std::vector<ScriptedOutput> outputs) {
  std::lock_guard<std::mutex> lock(mutex_);
  for (Rule& rule : rules_) {
    if (rule.matcher.scope == matcher.scope &&
        rule.matcher.needle == matcher.needle) {
      rule.outputs.insert(rule.outputs.end(), outputs.begin(), outputs.end());
      return;
    }
  }
  Rule rule;
  rule.matcher = matcher;
  rule.outputs.assign(outputs.begin(), outputs.end());
  rules_.push_back(std::move(rule));
}

void MockBackend::load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open script file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  load_script_text(buf.str(), path);
}

void MockBackend::load_script_text(const std::string& text,
                                   const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaViolation, origin + ":" +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    }
    Matcher matcher;
    matcher.needle = j.at("matcher_substring").get<std::string>();
    std::string scope = j.value("match_scope", std::string("any"));
    if (scope == "last")
      matcher.scope = Matcher::Scope::last_message;
    else if (scope == "any")
      matcher.scope = Matcher::Scope::any_message;
    else
      throw Error(Errc::SchemaViolation,
                  origin + ":" + std::to_string(line_no) +
                      ": unknown match_scope: " + scope);

    std::string kind = j.at("output_kind").get<std::string>();
    ScriptedOutput out;
    if (kind == "text") {
      out = ScriptedOutput::make_text(j.at("payload").get<std::string>());
    } else if (kind == "text_truncated") {
      out = ScriptedOutput::make_truncated_text(
          j.at("payload").get<std::string>());
    } else if (kind == "tool_call") {
      const nlohmann::json& payload = j.at("payload");
      out = ScriptedOutput::make_tool_call(
          payload.at("name").get<std::string>(),
          payload.at("arguments").dump());
    } else if (kind == "transport_error") {
      out = ScriptedOutput::make_transport_error();
    } else {
      throw Error(Errc::SchemaViolation,
                  origin + ":" + std::to_string(line_no) +
                      ": unknown output_kind: " + kind);
    }
    out.reasoning_tokens = j.value("reasoning_tokens", std::uint64_t{0});
    out.delay_ms = j.value("delay_ms", std::uint32_t{0});
    script(matcher, {out});
  }
}

bool MockBackend::matches(const Matcher& matcher, const ChatRequest& request) {
  if (request.messages.empty()) return false;
  if (matcher.scope == Matcher::Scope::last_message)
    return request.messages.back().text.find(matcher.needle) !=
           std::string::npos;
  for (const Message& message : request.messages) {
    if (message.text.find(matcher.needle) != std::string::npos) return true;
  }
  return false;
}

Output MockBackend::to_output(const ScriptedOutput& scripted) {
  Output out;
  switch (scripted.kind) {
    case ScriptedOutput::Kind::text:
      out.kind = Output::Kind::text;
      out.text = scripted.text;
      break;
    case ScriptedOutput::Kind::text_truncated:
      out.kind = Output::Kind::text;
      out.text = scripted.text;
      out.truncated = true;
      break;
    case ScriptedOutput::Kind::tool_call:
      out.kind = Output::Kind::tool_call;
      out.call.name = scripted.tool_name;
      out.call.arguments_json = scripted.arguments_json;
      break;
    case ScriptedOutput::Kind::transport_error:
      break;
  }
  return out;
}

std::uint64_t MockBackend::completion_proxy(const ScriptedOutput& scripted) {
  if (scripted.kind == ScriptedOutput::Kind::tool_call) {
    // Proxy over argument values, joined in key order. Deliberately
    // malformed scripted arguments count as raw text.
    nlohmann::json args =
        nlohmann::json::parse(scripted.arguments_json, nullptr,
                              /*allow_exceptions=*/false);
    if (args.is_discarded() || !args.is_object())
      return count_tokens_proxy(scripted.arguments_json);
    std::string joined;
    for (auto it = args.begin(); it != args.end(); ++it) {
      if (!joined.empty()) joined += " ";
      if (it.value().is_string())
        joined += it.value().get<std::string>();
      else
        joined += it.value().dump();
    }
    return count_tokens_proxy(joined);
  }
  return count_tokens_proxy(scripted.text);
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  std::uint32_t delay_ms = 0;
  ChatResponse response = complete_locked(request, &delay_ms);
  if (delay_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  return response;
}

ChatResponse MockBackend::complete_locked(const ChatRequest& request,
                                          std::uint32_t* delay_ms) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (request.messages.empty())
    throw Error(Errc::MalformedResponse, "request has no messages");

  LogEntry entry;
  entry.request = request;

  // First matching rule that still has outputs; exhausted rules are
  // transparent so phase-ordered scripts can share overlapping needles.
  int rule_index = -1;
  bool matched_any = false;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (!matches(rules_[i].matcher, request)) continue;
    matched_any = true;
    if (!rules_[i].outputs.empty()) {
      rule_index = static_cast<int>(i);
      break;
    }
  }
  entry.matched_rule = rule_index;
  if (rule_index < 0) {
    log_.push_back(std::move(entry));
    throw Error(Errc::ScriptExhausted,
                matched_any ? "matching script rules have no outputs left"
                            : "no script rule matches request");
  }

  Rule& rule = rules_[static_cast<std::size_t>(rule_index)];
  if (rule.outputs.size() < request.sample_count) {
    if (!rule.outputs.empty() &&
        rule.outputs.front().kind == ScriptedOutput::Kind::transport_error) {
      rule.outputs.pop_front();
      entry.transport_error = true;
      log_.push_back(std::move(entry));
      throw Error(Errc::TransportError, "scripted transport failure");
    }
    log_.push_back(std::move(entry));
    throw Error(Errc::ScriptExhausted,
                "script rule for \"" + rule.matcher.needle + "\" has " +
                    std::to_string(rule.outputs.size()) + " outputs left, " +
                    std::to_string(request.sample_count) + " requested");
  }
  if (rule.outputs.front().kind == ScriptedOutput::Kind::transport_error) {
    rule.outputs.pop_front();
    entry.transport_error = true;
    log_.push_back(std::move(entry));
    throw Error(Errc::TransportError, "scripted transport failure");
  }

  ChatResponse response;
  std::uint64_t prompt = 0;
  for (const Message& message : request.messages)
    prompt += count_tokens_proxy(message.text);
  response.usage.prompt_tokens = prompt;

  for (std::uint32_t i = 0; i < request.sample_count; ++i) {
    ScriptedOutput scripted = rule.outputs.front();
    rule.outputs.pop_front();
    if (scripted.kind == ScriptedOutput::Kind::transport_error) {
      entry.transport_error = true;
      log_.push_back(std::move(entry));
      throw Error(Errc::TransportError, "scripted transport failure");
    }
    if (delay_ms && scripted.delay_ms > *delay_ms)
      *delay_ms = scripted.delay_ms;
    response.usage.completion_tokens += completion_proxy(scripted);
    response.usage.reasoning_tokens += scripted.reasoning_tokens;
    response.outputs.push_back(to_output(scripted));
  }
  log_.push_back(std::move(entry));
  return response;
}

std::vector<MockBackend::LogEntry> MockBackend::log() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

std::size_t MockBackend::request_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_.size();
}

std::size_t MockBackend::pending_outputs() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t n = 0;
  for (const Rule& rule : rules_) n += rule.outputs.size();
  return n;
}

}  // namespace sleepd
