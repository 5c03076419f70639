#include "iprop/http_client.hpp"

#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace iprop {

using nlohmann::json;

struct HttpChatClient::Endpoint {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // e.g. /v1
};

namespace {

Sleeper default_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace

HttpChatClient::HttpChatClient(ProviderConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleep_(sleeper ? std::move(sleeper) : default_sleeper()),
      limiter_(config_.max_in_flight) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw Error(ErrorCode::InvalidConfig, "invalid provider base_url '" + config_.base_url + "'");
  }
  endpoint_ = std::make_unique<Endpoint>(Endpoint{m[1].str(), m[2].str()});
  while (!endpoint_->path_prefix.empty() && endpoint_->path_prefix.back() == '/') {
    endpoint_->path_prefix.pop_back();
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint_->origin.starts_with("https") || endpoint_->origin.starts_with("HTTPS")) {
    throw Error(ErrorCode::InvalidConfig, "this build has no TLS support for " + config_.base_url);
  }
#endif
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::provider_id() const {
  return std::string(to_string(config_.kind)) + ":" + endpoint_->origin;
}

namespace {

struct HttpOutcome {
  int status = 0;
  std::string body;
};

/// One HTTP exchange with error classification. Returns only on 2xx.
template <typename Send>
HttpOutcome exchange(const std::string& what, const RetryPolicy& policy, Send&& send) {
  const auto started = std::chrono::steady_clock::now();
  httplib::Result res = send();
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const auto err = res.error();
    if (elapsed >= policy.attempt_timeout || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout, what + ": request timed out");
    }
    throw Error(ErrorCode::ProviderUnreachable, what + ": " + httplib::to_string(err),
                json{{"transport_error", httplib::to_string(err)}});
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::AuthFailure, what + ": HTTP " + std::to_string(status),
                json{{"status", status}});
  }
  if (status == 429 || status >= 500) {
    throw Error(ErrorCode::ProviderUnreachable, what + ": HTTP " + std::to_string(status),
                json{{"status", status}});
  }
  if (status < 200 || status >= 300) {
    throw Error(ErrorCode::BadResponse, what + ": HTTP " + std::to_string(status) + ": " + res->body,
                json{{"status", status}});
  }
  return {status, res->body};
}

}  // namespace

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  json messages = json::array();
  if (request.system_message) {
    messages.push_back({{"role", "system"}, {"content", *request.system_message}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_message}});
  json body{{"model", request.model_name},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
            {"stream", false}};
  if (request.seed) body["seed"] = *request.seed;
  const std::string payload = body.dump();

  auto permit = limiter_.acquire();
  const auto started = std::chrono::steady_clock::now();
  HttpOutcome out = with_retries(config_.retry, sleep_, [&](int) {
    httplib::Client cli(endpoint_->origin);
    const auto timeout = config_.retry.attempt_timeout;
    cli.set_connection_timeout(std::min<std::chrono::milliseconds>(timeout, std::chrono::seconds(10)));
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    return exchange("chat completion", config_.retry, [&] {
      return cli.Post(endpoint_->path_prefix + "/chat/completions", headers, payload,
                      "application/json");
    });
  });
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  std::string text;
  try {
    const auto doc = json::parse(out.body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_null()) text = content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadResponse, std::string("malformed chat completion: ") + e.what());
  }
  if (text.empty()) throw Error(ErrorCode::ResponseEmpty, "provider returned an empty completion");
  return ChatResponse{std::move(text), latency.count(), provider_id()};
}

std::vector<std::string> HttpChatClient::list_models() {
  auto permit = limiter_.acquire();
  HttpOutcome out = with_retries(config_.retry, sleep_, [&](int) {
    httplib::Client cli(endpoint_->origin);
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(config_.retry.attempt_timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    return exchange("list models", config_.retry,
                    [&] { return cli.Get(endpoint_->path_prefix + "/models", headers); });
  });
  std::vector<std::string> models;
  try {
    const auto doc = json::parse(out.body);
    for (const auto& m : doc.at("data")) models.push_back(m.at("id").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadResponse, std::string("malformed model list: ") + e.what());
  }
  if (models.empty()) throw Error(ErrorCode::BadResponse, "provider reported no models");
  return models;
}

}  // namespace iprop
