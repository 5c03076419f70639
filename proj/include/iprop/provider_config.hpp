#pragma once

#include <filesystem>
#include <string>

#include "iprop/llm_client.hpp"
#include "iprop/types.hpp"

namespace iprop {

struct ProviderConfig {
  ProviderKind kind = ProviderKind::mock;
  /// OpenAI-style API root, e.g. "https://api.openai.com/v1". Requests go to
  /// <base_url>/chat/completions and <base_url>/models.
  std::string base_url;
  std::string api_key;
  std::string default_model;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::filesystem::path mock_script;
};

inline constexpr const char* kApiKeyEnv = "IPROP_API_KEY";
inline constexpr const char* kDefaultLocalServerUrl = "http://localhost:11434/v1";
inline constexpr const char* kDefaultRemoteUrl = "https://api.openai.com/v1";

/// Reads a provider configuration file. Either a JSON object or TOML-style
/// `key = value` lines (`#` comments, optional quotes). Keys: provider,
/// base_url, api_key, model, max_in_flight, timeout_s, max_attempts,
/// backoff_base_ms, mock_script. A relative mock_script is resolved against
/// the file's directory.
ProviderConfig load_provider_config(const std::filesystem::path& path);

/// Fills unset fields with per-kind defaults and lets IPROP_API_KEY override
/// the key from the file.
void finalize_provider_config(ProviderConfig& config);

}  // namespace iprop
