#include "structrag/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace structrag::log {

namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;
constexpr std::string_view kNames[] = {"debug", "info", "warn", "error"};
}  // namespace

void set_level(Level level) noexcept { g_level = level; }
Level level() noexcept { return g_level; }

void write(Level level, std::string_view message) {
    if (level < g_level.load() || level == Level::off) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace structrag::log
