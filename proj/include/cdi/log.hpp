#pragma once

#include <string_view>

namespace cdi::log {

enum class Level { Debug, Info, Warn, Error, Off };

void set_level(Level level);
Level level();

void write(Level level, std::string_view msg);
inline void debug(std::string_view msg) { write(Level::Debug, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void warn(std::string_view msg) { write(Level::Warn, msg); }
inline void error(std::string_view msg) { write(Level::Error, msg); }

}  // namespace cdi::log
