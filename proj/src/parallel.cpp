#include "heislab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace heis {

namespace {

int threads_from_env() {
    if (const char* v = std::getenv("HEISLAB_THREADS")) {
        try {
            const int n = std::stoi(v);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int>& thread_setting() {
    static std::atomic<int> value{threads_from_env()};
    return value;
}

}  // namespace

int default_threads() { return thread_setting().load(); }

void set_default_threads(int threads) { thread_setting().store(threads > 0 ? threads : threads_from_env()); }

}  // namespace heis
