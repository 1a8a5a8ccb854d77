#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "scoopsim/camera.hpp"
#include "scoopsim/grid.hpp"
#include "scoopsim/material.hpp"

namespace scoopsim {

// Top-down orthographic observation: per-cell surface height, color, and a
// validity mask for cells no point landed in.
struct RasterObservation {
    Grid<float> depth;  // cm
    Grid<Rgb> color;
    Grid<std::uint8_t> valid;
    double cell_size = 1.0;

    std::size_t nx() const { return depth.nx(); }
    std::size_t ny() const { return depth.ny(); }

    bool all_valid() const {
        for (auto v : valid.raw())
            if (!v) return false;
        return true;
    }

    // Bilinear sample between cell centers; the caller keeps (x, y) inside
    // the safe domain [cell/2, (n-1/2)*cell].
    double sample_depth(double x, double y) const {
        const double gx = x / cell_size - 0.5;
        const double gy = y / cell_size - 0.5;
        const long ix = std::clamp(static_cast<long>(std::floor(gx)), 0L,
                                   static_cast<long>(nx()) - 2);
        const long iy = std::clamp(static_cast<long>(std::floor(gy)), 0L,
                                   static_cast<long>(ny()) - 2);
        const double tx = std::clamp(gx - ix, 0.0, 1.0);
        const double ty = std::clamp(gy - iy, 0.0, 1.0);
        const double v00 = depth(ix, iy), v10 = depth(ix + 1, iy);
        const double v01 = depth(ix, iy + 1), v11 = depth(ix + 1, iy + 1);
        return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
    }

    Rgb sample_color(double x, double y) const {
        const double gx = x / cell_size - 0.5;
        const double gy = y / cell_size - 0.5;
        const long ix = std::clamp(static_cast<long>(std::floor(gx)), 0L,
                                   static_cast<long>(nx()) - 2);
        const long iy = std::clamp(static_cast<long>(std::floor(gy)), 0L,
                                   static_cast<long>(ny()) - 2);
        const double tx = std::clamp(gx - ix, 0.0, 1.0);
        const double ty = std::clamp(gy - iy, 0.0, 1.0);
        auto lerp_c = [&](auto get) {
            const double v00 = get(color(ix, iy)), v10 = get(color(ix + 1, iy));
            const double v01 = get(color(ix, iy + 1)), v11 = get(color(ix + 1, iy + 1));
            return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
        };
        return {lerp_c([](const Rgb& c) { return c.r; }), lerp_c([](const Rgb& c) { return c.g; }),
                lerp_c([](const Rgb& c) { return c.b; })};
    }
};

// Orthographic binning: per cell, the highest point wins (top surface seen
// from above); its color is kept. Cells without points are marked invalid.
inline RasterObservation reproject_topdown(const PointCloud& cloud, std::size_t nx,
                                           std::size_t ny, double cell_size) {
    RasterObservation r;
    r.cell_size = cell_size;
    r.depth = Grid<float>(nx, ny, 0.0f);
    r.color = Grid<Rgb>(nx, ny);
    r.valid = Grid<std::uint8_t>(nx, ny, 0);
    for (const auto& p : cloud.points) {
        const long ix = static_cast<long>(std::floor(p.x / cell_size));
        const long iy = static_cast<long>(std::floor(p.y / cell_size));
        if (!r.depth.in_bounds(ix, iy)) continue;
        if (!r.valid(ix, iy) || p.z > r.depth(ix, iy)) {
            r.depth(ix, iy) = static_cast<float>(p.z);
            r.color(ix, iy) = p.color;
            r.valid(ix, iy) = 1;
        }
    }
    return r;
}

// Reconstructs missing cells: depth by inverse-square-distance interpolation
// over valid cells within `radius` cells (falling back to the globally
// nearest valid cell), color from the nearest valid cell. Valid cells pass
// through untouched.
inline RasterObservation fill_missing(const RasterObservation& raster, int radius = 8) {
    const long nx = static_cast<long>(raster.nx());
    const long ny = static_cast<long>(raster.ny());

    std::vector<std::pair<long, long>> valid_cells;
    for (long ix = 0; ix < nx; ++ix)
        for (long iy = 0; iy < ny; ++iy)
            if (raster.valid(ix, iy)) valid_cells.emplace_back(ix, iy);
    if (valid_cells.empty()) throw std::runtime_error("fill_missing: no valid cells");

    RasterObservation out = raster;
    for (long ix = 0; ix < nx; ++ix) {
        for (long iy = 0; iy < ny; ++iy) {
            if (raster.valid(ix, iy)) continue;
            double wsum = 0.0, vsum = 0.0;
            double best_d2 = std::numeric_limits<double>::max();
            long best_ix = -1, best_iy = -1;
            for (long dx = -radius; dx <= radius; ++dx) {
                for (long dy = -radius; dy <= radius; ++dy) {
                    const long jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
                    if (!raster.valid(jx, jy)) continue;
                    const double d2 = static_cast<double>(dx * dx + dy * dy);
                    if (d2 > static_cast<double>(radius) * radius) continue;
                    wsum += 1.0 / d2;
                    vsum += raster.depth(jx, jy) / d2;
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best_ix = jx;
                        best_iy = jy;
                    }
                }
            }
            if (wsum == 0.0) {
                // Nothing in radius: global nearest valid cell.
                for (const auto& [jx, jy] : valid_cells) {
                    const double d2 = static_cast<double>((jx - ix) * (jx - ix) +
                                                          (jy - iy) * (jy - iy));
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best_ix = jx;
                        best_iy = jy;
                    }
                }
                out.depth(ix, iy) = raster.depth(best_ix, best_iy);
            } else {
                out.depth(ix, iy) = static_cast<float>(vsum / wsum);
            }
            out.color(ix, iy) = raster.color(best_ix, best_iy);
            out.valid(ix, iy) = 1;
        }
    }
    return out;
}

}  // namespace scoopsim
