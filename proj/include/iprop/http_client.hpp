#pragma once

#include <memory>

#include "iprop/llm_client.hpp"
#include "iprop/provider_config.hpp"

namespace iprop {

/// Client for OpenAI-style `/chat/completions` endpoints. Serves both remote
/// APIs and local model servers that speak the same protocol.
class HttpChatClient final : public LlmClient {
 public:
  explicit HttpChatClient(ProviderConfig config, Sleeper sleeper = {});
  ~HttpChatClient() override;

  ChatResponse complete(const ChatRequest& request) override;
  std::vector<std::string> list_models() override;
  std::string provider_id() const override;
  std::size_t max_in_flight() const override { return limiter_.limit(); }

  const InFlightLimiter& limiter() const noexcept { return limiter_; }

 private:
  struct Endpoint;

  ProviderConfig config_;
  Sleeper sleep_;
  InFlightLimiter limiter_;
  std::unique_ptr<Endpoint> endpoint_;
};

}  // namespace iprop
