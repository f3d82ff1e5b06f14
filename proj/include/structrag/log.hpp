#pragma once

#include <string_view>

// Minimal leveled logging to stderr, shared by the pipeline and the CLI.
namespace structrag::log {

enum class Level { debug, info, warn, error, off };

void set_level(Level level) noexcept;
Level level() noexcept;

void write(Level level, std::string_view message);

inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }

}  // namespace structrag::log
