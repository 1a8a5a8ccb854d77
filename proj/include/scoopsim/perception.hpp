#pragma once

#include <cstdint>

#include "scoopsim/camera.hpp"
#include "scoopsim/raster.hpp"
#include "scoopsim/terrain.hpp"

namespace scoopsim {

struct PerceptionConfig {
    CameraPose pose;
    double noise_sigma = 0.0;  // cm, additive depth noise
    int fill_radius = 8;       // cells
};

// Full observation pipeline: render, filter anomalies, reproject top-down,
// reconstruct missing cells. Output raster matches the terrain grid.
inline RasterObservation perceive(const TerrainState& state, const PerceptionConfig& cfg,
                                  const MaterialCatalog& catalog, std::uint64_t noise_seed = 0) {
    const PointCloud cloud =
        render_pointcloud(state, cfg.pose, catalog, cfg.noise_sigma, noise_seed);
    const CloudFilter filter{state.spec.bin_width, state.spec.bin_length, -0.5,
                             state.spec.max_height + 1.0};
    const PointCloud clean = filter_anomalies(cloud, filter);
    const RasterObservation raster =
        reproject_topdown(clean, state.height.nx(), state.height.ny(), state.spec.cell_size);
    return fill_missing(raster, cfg.fill_radius);
}

}  // namespace scoopsim
