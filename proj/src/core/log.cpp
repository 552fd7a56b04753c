#include "wgn/log.hpp"

#include <iostream>
#include <mutex>

namespace wgn {

namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::Info;

void stderr_sink(LogLevel level, const std::string& message) {
    static constexpr const char* tags[] = {"debug", "info", "warning", "error"};
    std::cerr << "[wgn " << tags[static_cast<int>(level)] << "] " << message << '\n';
}

LogSink g_sink = stderr_sink;

}  // namespace

LogSink set_log_sink(LogSink sink) {
    std::lock_guard lock(g_mutex);
    auto previous = std::move(g_sink);
    g_sink = sink ? std::move(sink) : LogSink(stderr_sink);
    return previous;
}

void set_log_level(LogLevel min_level) {
    std::lock_guard lock(g_mutex);
    g_level = min_level;
}

void log(LogLevel level, const std::string& message) {
    std::lock_guard lock(g_mutex);
    if (level < g_level) return;
    g_sink(level, message);
}

}  // namespace wgn
