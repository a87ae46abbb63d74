#include "epsode/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace epsode::log {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("EPSODE_LOG");
  const std::string v = env ? env : "";
  if (v == "debug") return spdlog::level::debug;
  if (v == "info") return spdlog::level::info;
  return spdlog::level::err;
}

}  // namespace

spdlog::logger& logger() {
  static spdlog::logger instance = [] {
    spdlog::logger l("epsode", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l.set_level(level_from_env());
    l.set_pattern("epsode [%l] %v");
    return l;
  }();
  return instance;
}

}  // namespace epsode::log
