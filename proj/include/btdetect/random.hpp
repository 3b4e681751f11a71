#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace btdetect::rng {

// 64-bit FNV-1a. Used for cache keys, dataset digests, and seed derivation.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Derives an independent, labeled RNG stream from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return fnv1a64(label, base ^ 0x9e3779b97f4a7c15ull);
}

// Bounded draw. Modulo reduction: the bias is irrelevant at our scales and
// the result does not depend on the standard library's distribution code.
inline std::uint64_t next_below(std::mt19937_64& gen, std::uint64_t n) {
    return n <= 1 ? 0 : gen() % n;
}

inline double unit_real(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& gen) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(next_below(gen, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace btdetect::rng
