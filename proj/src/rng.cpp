#include "depositum/rng.hpp"

#include <array>

namespace depositum {

Rng rng_stream(std::uint64_t seed, std::uint64_t client, std::uint64_t iteration, std::uint64_t domain) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    const std::array<std::uint32_t, 8> words{lo(seed),   hi(seed),      lo(client), hi(client),
                                             lo(domain), hi(domain),    lo(iteration), hi(iteration)};
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace depositum
