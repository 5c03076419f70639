#include "iprop/mock_client.hpp"

#include <fstream>

namespace iprop {

using nlohmann::json;

namespace {

ErrorCode parse_error_code(const std::string& name) {
  for (auto code : {ErrorCode::ProviderUnreachable, ErrorCode::AuthFailure, ErrorCode::ResponseEmpty,
                    ErrorCode::Timeout, ErrorCode::BadResponse}) {
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::InvalidConfig, "mock rule error must be a provider error, got '" + name + "'");
}

}  // namespace

MockScript parse_mock_script(const json& doc) {
  MockScript script;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "mock script must be a JSON object");
    if (doc.contains("models")) script.models = doc.at("models").get<std::vector<std::string>>();
    if (script.models.empty()) throw Error(ErrorCode::InvalidConfig, "mock script lists no models");
    for (const auto& r : doc.value("rules", json::array())) {
      MockRule rule;
      rule.match = r.at("match").get<std::string>();
      if (r.contains("system")) rule.system_match = r.at("system").get<std::string>();
      if (r.contains("error")) {
        rule.error = parse_error_code(r.at("error").get<std::string>());
      } else {
        rule.response = r.at("response").get<std::string>();
      }
      script.rules.push_back(std::move(rule));
    }
    if (doc.contains("default_response")) {
      script.default_response = doc.at("default_response").get<std::string>();
    }
    if (doc.contains("quality")) {
      const auto& q = doc.at("quality");
      QualitySpec spec;
      spec.seed = q.value("seed", spec.seed);
      spec.initial = q.value("initial", spec.initial);
      spec.perturb_min = q.value("perturb_min", spec.perturb_min);
      spec.perturb_max = q.value("perturb_max", spec.perturb_max);
      if (spec.perturb_min > spec.perturb_max || spec.initial < 0.0 || spec.initial > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "mock quality spec out of range");
      }
      script.quality = spec;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad mock script: ") + e.what());
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read mock script " + path.string());
  try {
    return parse_mock_script(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

MockClient::MockClient(MockScript script, std::size_t max_in_flight)
    : script_(std::move(script)), limiter_(max_in_flight) {}

void MockClient::set_handler(Handler handler) {
  std::lock_guard lock(mu_);
  handler_ = std::move(handler);
}

void MockClient::add_rule(MockRule rule) {
  std::lock_guard lock(mu_);
  script_.rules.push_back(std::move(rule));
}

ChatResponse MockClient::complete(const ChatRequest& request) {
  auto permit = limiter_.acquire();
  const auto started = std::chrono::steady_clock::now();

  std::optional<std::string> answer;
  std::optional<ErrorCode> failure;
  Handler handler;
  {
    std::lock_guard lock(mu_);
    for (const auto& rule : script_.rules) {
      if (request.user_message.find(rule.match) == std::string::npos) continue;
      if (rule.system_match &&
          request.system_message.value_or("").find(*rule.system_match) == std::string::npos) {
        continue;
      }
      if (rule.error) {
        failure = rule.error;
      } else {
        answer = rule.response;
      }
      break;
    }
    handler = handler_;
  }
  if (!answer && !failure && handler) answer = handler(request);
  if (!answer && !failure) answer = script_.default_response;

  {
    std::lock_guard lock(mu_);
    log_.push_back(MockCall{request, answer.value_or("")});
  }
  if (failure) throw Error(*failure, "mock provider scripted failure");
  if (!answer || answer->empty()) {
    throw Error(ErrorCode::ResponseEmpty, "mock provider has no response for this request");
  }
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return ChatResponse{*answer, latency.count(), provider_id()};
}

std::vector<std::string> MockClient::list_models() { return script_.models; }

std::vector<MockCall> MockClient::calls() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t MockClient::call_count() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

void MockClient::clear_calls() {
  std::lock_guard lock(mu_);
  log_.clear();
}

}  // namespace iprop
