#pragma once

#include <cstdint>
#include <random>

namespace depositum {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for one (seed, client, iteration) cell.
///
/// `domain` separates streams that share coordinates but serve different
/// purposes (batch sampling vs. data synthesis vs. partitioning). The full
/// 64-bit coordinates go through std::seed_seq, so distinct tuples map to
/// distinct generator states and nothing depends on evaluation order.
Rng rng_stream(std::uint64_t seed, std::uint64_t client, std::uint64_t iteration, std::uint64_t domain = 0);

/// Stream domains used by the library.
namespace stream {
inline constexpr std::uint64_t kBatch = 0;
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kLipschitz = 4;
inline constexpr std::uint64_t kTestData = 5;
}  // namespace stream

}  // namespace depositum
