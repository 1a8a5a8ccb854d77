#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scoopsim/patch.hpp"
#include "scoopsim/raster.hpp"
#include "scoopsim/scoop.hpp"
#include "scoopsim/terrain.hpp"

namespace scoopsim {

struct CandidateConfig {
    double grid_pitch = 5.0;  // cm between candidate locations
    int yaw_count = 8;
    std::vector<double> depth_set = {0.2, 0.4, 0.6, 0.8};  // cm
    Stiffness stiffness = Stiffness::High;
    double max_slope = 3.0;  // cm/cm; steeper cells are not scooping terrain
    PatchConfig patch;
};

struct CandidateEntry {
    ScoopAction action;
    std::size_t patch_index;  // into CandidateSet::patches (shared per point/yaw)
};

// The dynamic candidate action set plus its generation metadata. Patches are
// stored once per (grid point, yaw); entries reference them with their own
// depth/stiffness parameters.
struct CandidateSet {
    std::vector<Patch> patches;
    std::vector<CandidateEntry> entries;
    double grid_pitch = 0.0;
    std::vector<Vec2> grid_points;         // delineated, window-checked points
    std::vector<int> feasible_yaw_counts;  // per grid point

    std::size_t size() const { return entries.size(); }

    // Patch for a candidate with its action parameters filled in.
    Patch patch_for(std::size_t i) const {
        Patch p = patches[entries[i].patch_index];
        p.action_depth = entries[i].action.depth;
        p.stiffness = entries[i].action.stiffness;
        return p;
    }
};

namespace detail {

inline double local_slope(const RasterObservation& raster, double x, double y) {
    const double h = raster.cell_size;
    const double dx =
        (raster.sample_depth(x + h, y) - raster.sample_depth(x - h, y)) / (2.0 * h);
    const double dy =
        (raster.sample_depth(x, y + h) - raster.sample_depth(x, y - h)) / (2.0 * h);
    return std::max(std::abs(dx), std::abs(dy));
}

}  // namespace detail

// Uniform grid over the scoopable-delineated region; at each point the yaw
// set minus geometrically infeasible headings, crossed with the depth set.
// The planner-failure coin is left out here: candidates are pre-filtered on
// geometry only.
inline CandidateSet generate_candidates(const RasterObservation& raster,
                                        const TerrainState& state, const WorkspaceConfig& ws,
                                        const ScoopGeometry& geom, const CandidateConfig& cfg) {
    if (!raster.all_valid())
        throw std::invalid_argument("generate_candidates: raster has invalid cells");
    if (cfg.depth_set.empty() || cfg.yaw_count < 1 || cfg.grid_pitch <= 0.0)
        throw std::invalid_argument("generate_candidates: bad config");

    WorkspaceConfig geo_ws = ws;
    geo_ws.planner_failure_rate = 0.0;

    // Patch windows must stay inside the raster for every yaw; the margin
    // covers the rotated window extremes plus one cell of bilinear slack.
    const double margin = cfg.patch.window_radius() + 2.0 * raster.cell_size;

    CandidateSet set;
    set.grid_pitch = cfg.grid_pitch;
    const double W = state.spec.bin_width;
    const double L = state.spec.bin_length;

    for (double x = margin; x <= W - margin + 1e-9; x += cfg.grid_pitch) {
        for (double y = margin; y <= L - margin + 1e-9; y += cfg.grid_pitch) {
            if (detail::local_slope(raster, x, y) > cfg.max_slope) continue;
            int feasible_yaws = 0;
            for (int k = 0; k < cfg.yaw_count; ++k) {
                const double theta = 2.0 * M_PI * k / cfg.yaw_count;
                ScoopAction probe{x, y, theta, cfg.depth_set.front(), cfg.stiffness};
                if (!check_feasibility(state, probe, geo_ws, geom)) continue;
                ++feasible_yaws;
                set.patches.push_back(extract_patch(raster, probe, cfg.patch));
                const std::size_t patch_index = set.patches.size() - 1;
                for (double d : cfg.depth_set)
                    set.entries.push_back(
                        {ScoopAction{x, y, theta, d, cfg.stiffness}, patch_index});
            }
            if (feasible_yaws > 0) {
                set.grid_points.push_back({x, y});
                set.feasible_yaw_counts.push_back(feasible_yaws);
            }
        }
    }
    if (set.entries.empty())
        throw std::runtime_error("generate_candidates: empty candidate set");
    return set;
}

}  // namespace scoopsim
