#include "stopt/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace stopt::log {

namespace {

std::atomic<int> g_level{-1};
std::mutex g_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

std::optional<Level> parse_level(std::string_view text) {
  if (text == "error") return Level::Error;
  if (text == "warn") return Level::Warn;
  if (text == "info") return Level::Info;
  if (text == "debug") return Level::Debug;
  return std::nullopt;
}

Level level() {
  int l = g_level.load();
  if (l < 0) {
    Level from_env = Level::Warn;
    if (const char* env = std::getenv("STO_LOG")) {
      if (auto parsed = parse_level(env)) from_env = *parsed;
    }
    l = static_cast<int>(from_env);
    g_level.store(l);
  }
  return static_cast<Level>(l);
}

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl)); }

void write(Level lvl, std::string_view message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << '[' << tag(lvl) << "] " << message << '\n';
}

}  // namespace stopt::log
