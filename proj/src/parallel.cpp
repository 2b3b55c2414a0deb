#include "depositum/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace depositum {

int configured_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    const int fallback = hw > 0 ? static_cast<int>(hw) : 1;
    const char* env = std::getenv("DEPOSITUM_THREADS");
    if (env == nullptr) return fallback;
    int value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end || value < 1) return fallback;
    return value;
}

}  // namespace depositum
