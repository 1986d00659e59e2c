#pragma once

#include <string>

namespace p2pfaas::logging {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Parsed once from the P2PFAAS_LOG environment variable
// (debug|info|warn|error|off); defaults to warn.
Level threshold();

void write(Level level, const std::string& message);

inline void debug(const std::string& message) { write(Level::Debug, message); }
inline void info(const std::string& message) { write(Level::Info, message); }
inline void warn(const std::string& message) { write(Level::Warn, message); }
inline void error(const std::string& message) { write(Level::Error, message); }

}  // namespace p2pfaas::logging
