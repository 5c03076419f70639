#include "iprop/provider_config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iprop/text.hpp"

namespace iprop {

namespace {

std::map<std::string, std::string> parse_key_values(const std::string& content,
                                                    const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  if (text::trim(content).starts_with("{")) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    for (const auto& [k, v] : doc.items()) out[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return out;
  }
  std::istringstream in(content);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#' || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(n) + ": expected key = value");
    }
    auto key = text::trim(body.substr(0, eq));
    auto value = text::trim(body.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    } else if (auto hash = value.find(" #"); hash != std::string_view::npos) {
      value = text::trim(value.substr(0, hash));
    }
    out[std::string(key)] = std::string(value);
  }
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto n = std::stoll(v, &used);
    if (used != v.size() || n < 1) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "'" + key + "' must be a positive integer, got '" + v + "'");
  }
}

}  // namespace

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read provider config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();

  ProviderConfig cfg;
  for (const auto& [key, value] : parse_key_values(buf.str(), path)) {
    if (key == "provider") {
      cfg.kind = parse_provider_kind(value);
    } else if (key == "base_url") {
      cfg.base_url = value;
    } else if (key == "api_key") {
      cfg.api_key = value;
    } else if (key == "model") {
      cfg.default_model = value;
    } else if (key == "max_in_flight") {
      cfg.max_in_flight = to_count(key, value);
    } else if (key == "timeout_s") {
      cfg.retry.attempt_timeout = std::chrono::seconds(to_count(key, value));
    } else if (key == "max_attempts") {
      cfg.retry.max_attempts = static_cast<int>(std::min<std::size_t>(to_count(key, value), 4));
    } else if (key == "backoff_base_ms") {
      cfg.retry.base_delay = std::chrono::milliseconds(to_count(key, value));
    } else if (key == "mock_script") {
      std::filesystem::path p(value);
      cfg.mock_script = p.is_relative() ? path.parent_path() / p : p;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown provider config key '" + key + "'");
    }
  }
  return cfg;
}

void finalize_provider_config(ProviderConfig& config) {
  if (const char* key = std::getenv(kApiKeyEnv); key != nullptr && *key != '\0') {
    config.api_key = key;
  }
  if (config.base_url.empty()) {
    if (config.kind == ProviderKind::local_server) config.base_url = kDefaultLocalServerUrl;
    if (config.kind == ProviderKind::openai_compatible) config.base_url = kDefaultRemoteUrl;
  }
  while (!config.base_url.empty() && config.base_url.back() == '/') config.base_url.pop_back();
  if (config.default_model.empty() && config.kind == ProviderKind::mock) {
    config.default_model = "mock";
  }
}

}  // namespace iprop
