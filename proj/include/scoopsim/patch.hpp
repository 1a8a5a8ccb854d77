#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>

#include "scoopsim/raster.hpp"
#include "scoopsim/scoop.hpp"

namespace scoopsim {

struct PatchConfig {
    int size = 32;               // P, samples per side
    double extent_cm = 16.0;     // physical window span
    double pitch() const { return extent_cm / size; }
    // Half-diagonal of the rotated sample lattice, for window checks.
    double window_radius() const {
        const double half = (size / 2) * pitch();
        return std::sqrt(2.0) * half;
    }
};

// Action-aligned observation crop. Rows run along the scoop heading; the
// depth plane is normalized so the sample at the action point is 0.
struct Patch {
    Eigen::MatrixXf depth;                  // P x P, cm relative to center
    std::array<Eigen::MatrixXf, 3> color;   // P x P each, [0, 1]
    double action_depth = 0.0;              // cm
    Stiffness stiffness = Stiffness::High;

    int size() const { return static_cast<int>(depth.rows()); }
};

// Bilinear crop of a P x P window of extent_cm centered at the action point,
// rotated so the heading maps to +row. Throws if the rotated window leaves
// the raster's bilinear-safe domain or the raster has invalid cells.
inline Patch extract_patch(const RasterObservation& raster, const ScoopAction& action,
                           const PatchConfig& cfg) {
    if (!raster.all_valid())
        throw std::invalid_argument("extract_patch: raster has invalid cells");
    const int P = cfg.size;
    const double pitch = cfg.pitch();
    const Vec2 axis{std::cos(action.theta), std::sin(action.theta)};
    const Vec2 perp{-std::sin(action.theta), std::cos(action.theta)};

    const double lo = raster.cell_size * 0.5;
    const double hix = (raster.nx() - 0.5) * raster.cell_size;
    const double hiy = (raster.ny() - 0.5) * raster.cell_size;
    const double off_min = (0 - P / 2) * pitch;
    const double off_max = (P - 1 - P / 2) * pitch;
    for (double u : {off_min, off_max}) {
        for (double v : {off_min, off_max}) {
            const Vec2 p{action.x + u * axis.x + v * perp.x, action.y + u * axis.y + v * perp.y};
            if (p.x < lo || p.x > hix || p.y < lo || p.y > hiy)
                throw std::invalid_argument("extract_patch: window exceeds raster");
        }
    }

    Patch patch;
    patch.depth.resize(P, P);
    for (auto& c : patch.color) c.resize(P, P);
    patch.action_depth = action.depth;
    patch.stiffness = action.stiffness;

    for (int i = 0; i < P; ++i) {
        const double u = (i - P / 2) * pitch;
        for (int j = 0; j < P; ++j) {
            const double v = (j - P / 2) * pitch;
            const double x = action.x + u * axis.x + v * perp.x;
            const double y = action.y + u * axis.y + v * perp.y;
            patch.depth(i, j) = static_cast<float>(raster.sample_depth(x, y));
            const Rgb c = raster.sample_color(x, y);
            patch.color[0](i, j) = static_cast<float>(c.r);
            patch.color[1](i, j) = static_cast<float>(c.g);
            patch.color[2](i, j) = static_cast<float>(c.b);
        }
    }
    const float center = patch.depth(P / 2, P / 2);
    patch.depth.array() -= center;
    return patch;
}

}  // namespace scoopsim
