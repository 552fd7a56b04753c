#pragma once

#include <functional>
#include <string>

namespace wgn {

enum class LogLevel { Debug, Info, Warning, Error };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink (default: stderr, Info and above).
/// Returns the previous sink so tests can restore it.
LogSink set_log_sink(LogSink sink);
void set_log_level(LogLevel min_level);

void log(LogLevel level, const std::string& message);
inline void log_info(const std::string& m) { log(LogLevel::Info, m); }
inline void log_warning(const std::string& m) { log(LogLevel::Warning, m); }
inline void log_debug(const std::string& m) { log(LogLevel::Debug, m); }

}  // namespace wgn
