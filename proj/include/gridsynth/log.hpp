#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace gridsynth::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level& threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("GRIDSYNTH_LOG");
    if (!env) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
  }();
  return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
  if (lvl > threshold()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[gridsynth:%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& m) { emit(Level::error, m); }
inline void warn(const std::string& m) { emit(Level::warn, m); }
inline void info(const std::string& m) { emit(Level::info, m); }
inline void debug(const std::string& m) { emit(Level::debug, m); }

}  // namespace gridsynth::log
