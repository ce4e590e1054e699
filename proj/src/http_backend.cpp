#include "sleepd/http_backend.hpp"

#include <httplib.h>

#include <future>
#include <vector>

#include <json.hpp>

namespace sleepd {

namespace {

using nlohmann::json;

json tool_to_openai(const ToolSignature& tool) {
  json parameters;
  try {
    parameters = json::parse(tool.parameters_schema);
  } catch (const json::exception&) {
    parameters = json::object();
  }
  return {{"type", "function"},
          {"function",
           {{"name", tool.name},
            {"description", tool.description},
            {"parameters", parameters}}}};
}

}  // namespace

std::string chat_request_to_openai_json(const ChatRequest& request,
                                        const std::string& model) {
  json j;
  j["model"] = model;
  json messages = json::array();
  for (const Message& message : request.messages)
    messages.push_back(
        {{"role", role_name(message.role)}, {"content", message.text}});
  j["messages"] = messages;
  j["temperature"] = request.temperature;
  if (request.max_output_tokens) j["max_tokens"] = *request.max_output_tokens;
  if (request.effort) j["reasoning_effort"] = effort_name(*request.effort);
  if (!request.tools.empty()) {
    json tools = json::array();
    for (const ToolSignature& tool : request.tools)
      tools.push_back(tool_to_openai(tool));
    j["tools"] = tools;
  }
  return j.dump();
}

ChatResponse chat_response_from_openai_json(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedResponse,
                std::string("response is not JSON: ") + e.what());
  }
  ChatResponse response;
  if (!j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty())
    throw Error(Errc::MalformedResponse, "response has no choices");

  for (const json& choice : j["choices"]) {
    if (!choice.contains("message"))
      throw Error(Errc::MalformedResponse, "choice has no message");
    const json& message = choice["message"];
    Output output;
    if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
        !message["tool_calls"].empty()) {
      const json& call = message["tool_calls"].front();
      if (!call.contains("function"))
        throw Error(Errc::MalformedResponse, "tool call has no function");
      output.kind = Output::Kind::tool_call;
      output.call.name = call["function"].value("name", std::string());
      output.call.arguments_json =
          call["function"].value("arguments", std::string("{}"));
    } else {
      output.kind = Output::Kind::text;
      if (message.contains("content") && message["content"].is_string())
        output.text = message["content"].get<std::string>();
    }
    output.truncated = choice.value("finish_reason", std::string()) == "length";
    response.outputs.push_back(std::move(output));
  }

  if (j.contains("usage") && j["usage"].is_object()) {
    const json& usage = j["usage"];
    response.usage.prompt_tokens = usage.value("prompt_tokens", std::uint64_t{0});
    response.usage.completion_tokens =
        usage.value("completion_tokens", std::uint64_t{0});
    if (usage.contains("completion_tokens_details") &&
        usage["completion_tokens_details"].is_object())
      response.usage.reasoning_tokens =
          usage["completion_tokens_details"].value("reasoning_tokens",
                                                   std::uint64_t{0});
  }
  return response;
}

HttpBackend::HttpBackend(RemoteBackendConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw Error(Errc::ConfigError, "remote backend requires a base URL");
}

ChatResponse HttpBackend::complete_single(const ChatRequest& request) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_ms / 1000,
                                (config_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000,
                          (config_.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  ChatRequest outbound = request;
  outbound.temperature = config_.temperature;
  std::string body = chat_request_to_openai_json(outbound, config_.model);
  auto result =
      client.Post("/chat/completions", headers, body, "application/json");
  if (!result)
    throw Error(Errc::TransportError,
                "transport failure: " + httplib::to_string(result.error()));
  if (result->status == 429 || result->status >= 500)
    throw Error(Errc::TransportError,
                "server returned status " + std::to_string(result->status));
  if (result->status == 400 &&
      result->body.find("max_tokens") != std::string::npos)
    throw Error(Errc::BudgetRejected,
                "provider rejected max_output_tokens: " + result->body);
  if (result->status != 200)
    throw Error(Errc::MalformedResponse,
                "unexpected status " + std::to_string(result->status) + ": " +
                    result->body);
  return chat_response_from_openai_json(result->body);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  if (request.messages.empty())
    throw Error(Errc::MalformedResponse, "request has no messages");
  if (request.sample_count <= 1) return complete_single(request);

  // Parallel independent calls, merged in request order.
  ChatRequest single = request;
  single.sample_count = 1;
  std::vector<std::future<ChatResponse>> futures;
  futures.reserve(request.sample_count);
  for (std::uint32_t i = 0; i < request.sample_count; ++i)
    futures.push_back(std::async(std::launch::async, [this, single] {
      return complete_single(single);
    }));
  ChatResponse merged;
  for (std::future<ChatResponse>& future : futures) {
    ChatResponse one = future.get();
    if (one.outputs.empty())
      throw Error(Errc::MalformedResponse, "provider returned no outputs");
    merged.outputs.push_back(std::move(one.outputs.front()));
    merged.usage += one.usage;
  }
  return merged;
}

}  // namespace sleepd
