#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iprop/llm_client.hpp"

namespace iprop {

/// One scripted reaction: when `match` occurs in the user message (and
/// `system_match`, if set, occurs in the system message), answer `response`
/// or fail with `error`.
struct MockRule {
  std::string match;
  std::optional<std::string> system_match;
  std::string response;
  std::optional<ErrorCode> error;
};

/// Parameters of the hidden-quality simulation (see simulated_llm.hpp).
struct QualitySpec {
  std::uint64_t seed = 0;
  double initial = 0.5;
  double perturb_min = -0.05;
  double perturb_max = 0.10;
};

/// Mock scripting file:
///   {"models": [...], "rules": [{"match", "system"?, "response" | "error"}],
///    "default_response"?: "...", "quality"?: {"seed", "initial", "perturb_min", "perturb_max"}}
struct MockScript {
  std::vector<std::string> models{"mock"};
  std::vector<MockRule> rules;
  std::optional<std::string> default_response;
  std::optional<QualitySpec> quality;
};

MockScript parse_mock_script(const nlohmann::json& doc);
MockScript load_mock_script(const std::filesystem::path& path);

struct MockCall {
  ChatRequest request;
  std::string response;  // empty when the call failed
};

/// Deterministic in-process provider. Resolution order per request: first
/// matching rule, then the handler hook, then the default response. A request
/// nothing answers fails with ResponseEmpty.
class MockClient final : public LlmClient {
 public:
  using Handler = std::function<std::optional<std::string>(const ChatRequest&)>;

  explicit MockClient(MockScript script = {}, std::size_t max_in_flight = 4);

  void set_handler(Handler handler);
  void add_rule(MockRule rule);

  ChatResponse complete(const ChatRequest& request) override;
  std::vector<std::string> list_models() override;
  std::string provider_id() const override { return "mock"; }
  std::size_t max_in_flight() const override { return limiter_.limit(); }

  std::vector<MockCall> calls() const;
  std::size_t call_count() const;
  void clear_calls();
  std::size_t peak_in_flight() const { return limiter_.peak(); }

 private:
  MockScript script_;
  Handler handler_;
  InFlightLimiter limiter_;
  mutable std::mutex mu_;
  std::vector<MockCall> log_;
};

}  // namespace iprop
