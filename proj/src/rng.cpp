#include "covlab/rng.hpp"

#include <cstdlib>
#include <string>
#include <thread>

#include "covlab/parallel.hpp"

namespace covlab {

std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t state = mix64(seed);
    for (auto k : keys) {
        state = mix64(state ^ mix64(k + 0x632be59bd9b4e019ULL));
    }
    return state;
}

unsigned default_workers()
{
    if (const char* env = std::getenv("COVERAGE_LAB_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (...) {
            // fall through to hardware default
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace covlab
