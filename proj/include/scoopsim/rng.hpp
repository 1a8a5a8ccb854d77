#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scoopsim {

// splitmix64, used both as a bit mixer and for deriving independent
// substream seeds from a master seed. Platform-independent by construction,
// unlike std::hash.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b), c);
}

inline std::uint64_t hash_str(std::string_view s, std::uint64_t seed = 0) {
    std::uint64_t h = mix64(seed ^ 0x5bf03635ULL);
    for (char c : s) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return h;
}

// Uniform in [0, 1) derived from a hash, for stateless per-entity draws.
inline double hash_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(mix64(seed ^ 0x243f6a8885a308d3ULL));
}

}  // namespace scoopsim
