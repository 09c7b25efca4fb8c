#include "dendsom/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace dendsom::log {

namespace {
std::atomic<Level> g_level{Level::warning};
std::mutex g_mutex;

const char* tag(Level l) {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warning: return "warning";
        case Level::error: return "error";
        case Level::off: break;
    }
    return "";
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void write(Level l, std::string_view message) {
    if (l < g_level.load() || l == Level::off) return;
    std::lock_guard lock(g_mutex);
    std::clog << "[dendsom:" << tag(l) << "] " << message << '\n';
}

void warn_once(std::string_view key, std::string_view message) {
    static std::set<std::string, std::less<>> seen;
    {
        std::lock_guard lock(g_mutex);
        if (!seen.emplace(key).second) return;
    }
    write(Level::warning, message);
}

}  // namespace dendsom::log
