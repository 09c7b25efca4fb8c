#pragma once

#include <string_view>

namespace dendsom::log {

enum class Level { debug, info, warning, error, off };

void set_level(Level level);
Level level();

void write(Level level, std::string_view message);

inline void info(std::string_view m) { write(Level::info, m); }
inline void warning(std::string_view m) { write(Level::warning, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

/// Emits `message` at warning level the first time `key` is seen.
void warn_once(std::string_view key, std::string_view message);

}  // namespace dendsom::log
