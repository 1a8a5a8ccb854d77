#pragma once

#include <cmath>
#include <cstdint>

#include "scoopsim/rng.hpp"

namespace scoopsim {

namespace detail {

inline double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
    const std::uint64_t h = mix64(seed, static_cast<std::uint64_t>(ix) * 0x9e3779b1ULL,
                                  static_cast<std::uint64_t>(iy) * 0x85ebca77ULL);
    return 2.0 * hash_unit(h) - 1.0;  // [-1, 1)
}

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace detail

// Seeded value noise in [-1, 1], smooth-interpolated between hashed lattice
// values. Deterministic across platforms.
inline double value_noise(double x, double y, std::uint64_t seed) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = detail::smoothstep(x - fx);
    const double ty = detail::smoothstep(y - fy);
    const double v00 = detail::lattice_value(ix, iy, seed);
    const double v10 = detail::lattice_value(ix + 1, iy, seed);
    const double v01 = detail::lattice_value(ix, iy + 1, seed);
    const double v11 = detail::lattice_value(ix + 1, iy + 1, seed);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

// Two-octave fractal variant; amplitude normalized back to [-1, 1].
inline double fractal_noise(double x, double y, std::uint64_t seed) {
    const double base = value_noise(x, y, seed);
    const double detail_octave = value_noise(2.0 * x, 2.0 * y, mix64(seed, 0x51ed2701ULL));
    return (base + 0.5 * detail_octave) / 1.5;
}

}  // namespace scoopsim
