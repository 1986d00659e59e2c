#include "p2pfaas/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace p2pfaas::logging {

namespace {

Level parse_level() {
    const char* env = std::getenv("P2PFAAS_LOG");
    if (!env) return Level::Warn;
    const std::string value(env);
    if (value == "debug") return Level::Debug;
    if (value == "info") return Level::Info;
    if (value == "warn") return Level::Warn;
    if (value == "error") return Level::Error;
    if (value == "off") return Level::Off;
    return Level::Warn;
}

const char* label(Level level) {
    switch (level) {
        case Level::Debug:
            return "debug";
        case Level::Info:
            return "info";
        case Level::Warn:
            return "warn";
        case Level::Error:
            return "error";
        case Level::Off:
            return "off";
    }
    return "?";
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Level threshold() {
    static const Level level = parse_level();
    return level;
}

void write(Level level, const std::string& message) {
    if (level < threshold()) return;
    std::lock_guard lock(log_mutex());
    std::fprintf(stderr, "[p2pfaas %s] %s\n", label(level), message.c_str());
}

}  // namespace p2pfaas::logging
