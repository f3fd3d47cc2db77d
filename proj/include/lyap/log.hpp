#pragma once

// Verbosity from the LYAP_LOG environment variable (trace, debug, info,
// warn, error, off; default warn). Logs go to stderr so stdout and output
// files stay machine-readable.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace lyap {

inline std::shared_ptr<spdlog::logger> init_logging() {
  auto logger = spdlog::stderr_color_mt("lyap");
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("LYAP_LOG");
  logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  spdlog::set_default_logger(logger);
  return logger;
}

}  // namespace lyap
