#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "iprop/error.hpp"

namespace iprop {

struct ChatRequest {
  std::string model_name;
  std::optional<std::string> system_message;
  std::string user_message;
  double temperature = 0.0;
  int max_tokens = 256;
  /// Sampling seed forwarded to the provider; varies paraphrase requests.
  std::optional<std::uint64_t> seed;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  std::string provider_id;
};

struct RetryPolicy {
  int max_attempts = 4;  // first try + 3 retries
  std::chrono::milliseconds base_delay{500};
  double backoff_factor = 2.0;
  std::chrono::milliseconds attempt_timeout{120'000};
};

/// Uniform chat-completion interface. Implementations must be safe for
/// concurrent use and must bound their own in-flight requests.
class LlmClient {
 public:
  virtual ~LlmClient() = default;

  /// Returns the provider text verbatim. Throws Error with one of
  /// ProviderUnreachable, AuthFailure, ResponseEmpty, Timeout, BadResponse.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::vector<std::string> list_models() = 0;
  virtual std::string provider_id() const = 0;
  virtual std::size_t max_in_flight() const = 0;
};

/// Counting gate for concurrent provider requests.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight);

  class Permit {
   public:
    explicit Permit(InFlightLimiter* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit();

   private:
    InFlightLimiter* owner_;
  };

  [[nodiscard]] Permit acquire();
  std::size_t limit() const noexcept { return max_; }
  /// Highest number of simultaneously held permits observed.
  std::size_t peak() const;

 private:
  void release();

  std::size_t max_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Full-jitter exponential backoff: uniform in [0, base * factor^(retry-1)].
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry);

/// Whether a failed attempt with this code may be retried.
bool is_transient(ErrorCode code) noexcept;

/// Runs `attempt` until it succeeds, fails permanently, or the policy's
/// attempts are exhausted. Transient failures are ProviderUnreachable and
/// Timeout; the last transient error is rethrown after the final attempt.
template <typename F>
auto with_retries(const RetryPolicy& policy, const Sleeper& sleep, F&& attempt) {
  for (int n = 1;; ++n) {
    try {
      return attempt(n);
    } catch (const Error& e) {
      if (!is_transient(e.code()) || n >= policy.max_attempts) throw;
      sleep(backoff_delay(policy, n));
    }
  }
}

}  // namespace iprop
