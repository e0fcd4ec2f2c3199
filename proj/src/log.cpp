#include "softsensor/log.hpp"

#include <iostream>
#include <mutex>

namespace softsensor {

namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::Warning;
LogSink g_sink;

const char* prefix(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "debug: ";
    case LogLevel::Info: return "info: ";
    case LogLevel::Warning: return "warning: ";
  }
  return "";
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void set_log_level(LogLevel min_level) {
  std::lock_guard lock(g_mutex);
  g_level = min_level;
}

void log_message(LogLevel level, const std::string& message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, message);
    return;
  }
  if (level < g_level) return;
  std::cerr << prefix(level) << message << '\n';
}

}  // namespace softsensor
