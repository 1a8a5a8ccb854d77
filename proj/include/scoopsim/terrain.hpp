#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scoopsim/geometry.hpp"
#include "scoopsim/grid.hpp"
#include "scoopsim/material.hpp"
#include "scoopsim/noise.hpp"
#include "scoopsim/rng.hpp"

namespace scoopsim {

// A material region: polygon in bin coordinates (cm), optionally raised above
// the base surface (plateau offset applied inside the polygon).
struct MaterialRegion {
    std::vector<Vec2> polygon;
    MaterialId material = 0;
    double raise_cm = 0.0;
};

struct Mound {
    double x = 0.0, y = 0.0;  // cm, bin frame
    double radius = 1.0;      // cm
    double height = 0.0;      // cm
};

struct TerrainSpec {
    double bin_width = 90.0;    // cm, x extent
    double bin_length = 70.0;   // cm, y extent
    double cell_size = 1.0;     // cm
    double base_height = 10.0;  // cm
    double max_height = 40.0;   // cm
    MaterialId base_material = 0;
    std::vector<MaterialRegion> regions;
    std::vector<Mound> mounds;
    std::uint64_t seed = 0;

    std::size_t cells_x() const { return static_cast<std::size_t>(std::llround(bin_width / cell_size)); }
    std::size_t cells_y() const { return static_cast<std::size_t>(std::llround(bin_length / cell_size)); }

    void validate(const MaterialCatalog& catalog) const {
        if (bin_width <= 0 || bin_length <= 0 || cell_size <= 0)
            throw std::invalid_argument("terrain spec: bin dimensions and cell size must be > 0");
        if (base_height < 0 || base_height > max_height)
            throw std::invalid_argument("terrain spec: base_height outside [0, max_height]");
        if (!catalog.has_id(base_material))
            throw std::invalid_argument("terrain spec: unknown base material id");
        for (const auto& r : regions) {
            if (r.polygon.size() < 3)
                throw std::invalid_argument("terrain spec: region polygon needs >= 3 vertices");
            if (!catalog.has_id(r.material))
                throw std::invalid_argument("terrain spec: unknown region material id");
        }
        for (const auto& m : mounds) {
            if (m.x < 0 || m.x > bin_width || m.y < 0 || m.y > bin_length)
                throw std::invalid_argument("terrain spec: mound center outside bin");
            if (m.radius <= 0) throw std::invalid_argument("terrain spec: mound radius must be > 0");
        }
    }
};

// Ground-truth world: heightmap plus per-cell material assignment.
struct TerrainState {
    Grid<float> height;        // cm
    Grid<MaterialId> material;
    TerrainSpec spec;

    Vec2 cell_center(std::size_t ix, std::size_t iy) const {
        return {(ix + 0.5) * spec.cell_size, (iy + 0.5) * spec.cell_size};
    }
    // Cell containing a bin-frame point; caller guarantees (x, y) in bin.
    std::pair<std::size_t, std::size_t> cell_of(double x, double y) const {
        auto clamp_idx = [](double v, std::size_t n) {
            const long i = static_cast<long>(std::floor(v));
            return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
        };
        return {clamp_idx(x / spec.cell_size, height.nx()), clamp_idx(y / spec.cell_size, height.ny())};
    }
    double height_at(double x, double y) const {
        auto [ix, iy] = cell_of(x, y);
        return height(ix, iy);
    }
    bool in_bin(const Vec2& p) const {
        return p.x >= 0 && p.x <= spec.bin_width && p.y >= 0 && p.y <= spec.bin_length;
    }
};

// Deterministic synthesis: base plateau + region raises + per-material value
// noise + compact-support mounds, clamped to [0, max_height]. Bit-identical
// for identical (spec, seed).
inline TerrainState synthesize_terrain(const TerrainSpec& spec, const MaterialCatalog& catalog) {
    spec.validate(catalog);
    const std::size_t nx = spec.cells_x();
    const std::size_t ny = spec.cells_y();
    if (nx == 0 || ny == 0) throw std::invalid_argument("terrain spec: empty grid");

    TerrainState state;
    state.spec = spec;
    state.height = Grid<float>(nx, ny, 0.0f);
    state.material = Grid<MaterialId>(nx, ny, spec.base_material);

    // Material assignment: base covers the bin, later regions override.
    std::vector<std::size_t> region_cell_count(spec.regions.size(), 0);
    Grid<double> raise(nx, ny, 0.0);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const Vec2 c{(ix + 0.5) * spec.cell_size, (iy + 0.5) * spec.cell_size};
            for (std::size_t ri = 0; ri < spec.regions.size(); ++ri) {
                if (point_in_polygon(c, spec.regions[ri].polygon)) {
                    state.material(ix, iy) = spec.regions[ri].material;
                    raise(ix, iy) = spec.regions[ri].raise_cm;
                    ++region_cell_count[ri];
                }
            }
        }
    }
    for (std::size_t ri = 0; ri < spec.regions.size(); ++ri)
        if (region_cell_count[ri] == 0)
            throw std::invalid_argument("terrain spec: region " + std::to_string(ri) +
                                        " covers no cells");

    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const Vec2 c{(ix + 0.5) * spec.cell_size, (iy + 0.5) * spec.cell_size};
            const MaterialSpec& mat = catalog.by_id(state.material(ix, iy));
            double h = spec.base_height + raise(ix, iy);
            if (mat.roughness_amplitude > 0.0) {
                const std::uint64_t mat_seed = mix64(spec.seed, 0xb10c0de0ULL + mat.id);
                h += mat.roughness_amplitude *
                     fractal_noise(c.x / mat.roughness_length, c.y / mat.roughness_length, mat_seed);
            }
            for (const auto& m : spec.mounds) {
                const double r = std::hypot(c.x - m.x, c.y - m.y);
                if (r < m.radius) {
                    const double t = 1.0 - (r / m.radius) * (r / m.radius);
                    h += m.height * t * t;
                }
            }
            state.height(ix, iy) = static_cast<float>(std::clamp(h, 0.0, spec.max_height));
        }
    }
    return state;
}

inline double grid_volume(const TerrainState& state) {
    const double cell_area = state.spec.cell_size * state.spec.cell_size;
    double v = 0.0;
    for (const auto h : state.height.raw()) v += static_cast<double>(h) * cell_area;
    return v;
}

}  // namespace scoopsim
