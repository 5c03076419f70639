#include "iprop/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iprop {

InFlightLimiter::InFlightLimiter(std::size_t max_in_flight) : max_(std::max<std::size_t>(1, max_in_flight)) {}

InFlightLimiter::Permit::~Permit() {
  if (owner_) owner_->release();
}

InFlightLimiter::Permit InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_ < max_; });
  ++active_;
  peak_ = std::max(peak_, active_);
  return Permit(this);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

std::size_t InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const double cap = static_cast<double>(policy.base_delay.count()) *
                     std::pow(policy.backoff_factor, std::max(0, retry - 1));
  std::uniform_real_distribution<double> jitter(0.0, cap);
  return std::chrono::milliseconds(static_cast<std::int64_t>(jitter(rng)));
}

bool is_transient(ErrorCode code) noexcept {
  return code == ErrorCode::ProviderUnreachable || code == ErrorCode::Timeout;
}

}  // namespace iprop
