#pragma once

#include <string>

#include "sleepd/backend.hpp"

namespace sleepd {

struct RemoteBackendConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  double temperature = 0.0;  // applied to every outbound request
  std::uint32_t timeout_ms = 120000;
};

// Chat-completions client for any OpenAI-compatible endpoint. sample_count
// is realized as independent sequential calls, which keeps accounting
// identical across providers with and without native n-sampling.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(RemoteBackendConfig config);

  ChatResponse complete(const ChatRequest& request) override;

 private:
  ChatResponse complete_single(const ChatRequest& request);

  RemoteBackendConfig config_;
};

// Request/response mapping exposed for tests.
std::string chat_request_to_openai_json(const ChatRequest& request,
                                        const std::string& model);
ChatResponse chat_response_from_openai_json(const std::string& body);

}  // namespace sleepd
