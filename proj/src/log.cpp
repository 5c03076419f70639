#include "iprop/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace iprop::log {

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

std::atomic<Level> g_min_level{Level::info};

void stderr_sink(Level level, std::string_view message) {
  static constexpr std::string_view names[] = {"debug", "info", "warn", "error"};
  std::cerr << "[iprop " << names[static_cast<int>(level)] << "] " << message << '\n';
}

Sink& current_sink() {
  static Sink sink = stderr_sink;
  return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  auto previous = std::move(current_sink());
  current_sink() = sink ? std::move(sink) : Sink(stderr_sink);
  return previous;
}

void set_min_level(Level level) { g_min_level = level; }

void write(Level level, std::string_view message) {
  if (level < g_min_level.load()) return;
  std::lock_guard lock(sink_mutex());
  current_sink()(level, message);
}

}  // namespace iprop::log
