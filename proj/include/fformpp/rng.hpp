#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fformpp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent stream seed from a master seed and any number of keys.
/// Streams depend only on (seed, keys), never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, Rest... rest);
template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, Rest... rest);

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, Rest... rest) {
    return derive_seed(splitmix64(seed ^ splitmix64(key)), rest...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key, Rest... rest) {
    return derive_seed(seed, fnv1a(key), rest...);
}

template <typename... Keys>
Rng make_rng(std::uint64_t seed, Keys... keys) {
    return Rng(derive_seed(seed, keys...));
}

} // namespace fformpp
