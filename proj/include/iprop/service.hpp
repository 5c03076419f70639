#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "iprop/error.hpp"
#include "iprop/llm_client.hpp"
#include "iprop/provider_config.hpp"
#include "iprop/types.hpp"

namespace iprop {

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  ProviderConfig provider;
  /// Served at "/" when non-empty.
  std::filesystem::path static_dir;
  std::size_t max_upload_bytes = 64u << 20;
  /// Builds the LLM client for a session. Defaults to make_client(provider, ...).
  std::function<std::shared_ptr<LlmClient>(const SessionState&)> client_factory;
  /// Client for GET /api/models and the provider check on session creation.
  /// Defaults to make_client(provider).
  std::shared_ptr<LlmClient> models_client;
};

/// REST front end for the optimization loop:
///   POST /api/sessions                    multipart: dataset, format, text_field,
///                                         label_field, seed_prompt, config, dataset_name
///   GET  /api/sessions                    summaries
///   GET  /api/sessions/{id}               summary + progress + last_error
///   GET  /api/sessions/{id}/candidates    presentations, or progress while working
///   POST /api/sessions/{id}/selection     {"prompt_id": n, "iteration"?: i, "finish"?: bool}
///   POST /api/sessions/{id}/finish
///   GET  /api/sessions/{id}/trajectory    JSON, or CSV with Accept: text/csv
///   GET  /api/models
/// Every state transition is persisted before the response is sent. Candidate
/// building runs on a per-session background thread.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads stored sessions and restarts candidate building for those that
  /// were interrupted while working.
  void resume();

  /// Binds the listening socket; port 0 picks a free one. Returns the bound
  /// port, or -1 if binding failed.
  int bind(const std::string& host, int port);
  /// Serves requests until stop(). Requires a successful bind().
  void run();
  /// Stops accepting requests and cancels background work. Safe to call
  /// from another thread.
  void stop();

  /// Waits until no background build is running for `session_id` (tests).
  void wait_idle(const std::string& session_id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Maps an error code to the HTTP status used by the service.
int http_status_for(ErrorCode code) noexcept;
/// {"error": code, "message": ..., plus the error details}.
nlohmann::json error_body(const Error& error);

}  // namespace iprop
