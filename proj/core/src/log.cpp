#include "emplan/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace emplan::log {

namespace {

Level parse_env() {
  const char* raw = std::getenv("PLANNER_LOG");
  if (!raw) return Level::Warn;
  std::string v(raw);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "warn") return Level::Warn;
  if (v == "error") return Level::Error;
  if (v == "off" || v == "none") return Level::Off;
  return Level::Warn;
}

std::atomic<Level>& threshold_storage() {
  static std::atomic<Level> level{parse_env()};
  return level;
}

const char* tag(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    default: return "?";
  }
}

}  // namespace

Level threshold() { return threshold_storage().load(std::memory_order_relaxed); }

void set_threshold(Level level) {
  threshold_storage().store(level, std::memory_order_relaxed);
}

void write(Level level, const std::string& message) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[planner:" << tag(level) << "] " << message << "\n";
}

}  // namespace emplan::log
