#pragma once
// Seed derivation so that every stochastic stream is a pure function of (seed, key).

#include <cstdint>
#include <random>
#include <string_view>

namespace crowdmrp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_seed(seed, stream));
}

inline Rng make_rng(std::uint64_t seed, std::string_view key) {
    return make_rng(seed, hash_string(key));
}

}  // namespace crowdmrp
