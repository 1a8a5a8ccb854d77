#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "scoopsim/geometry.hpp"
#include "scoopsim/material.hpp"
#include "scoopsim/rng.hpp"
#include "scoopsim/terrain.hpp"

namespace scoopsim {

enum class Stiffness : std::uint8_t { Low = 0, High = 1 };

// Motion-primitive parameters: entry point (x, y), travel heading theta,
// cutting depth d, impedance stiffness b. The z of the cut plane is deduced
// from the surface at the entry point.
struct ScoopAction {
    double x = 0.0;      // cm
    double y = 0.0;      // cm
    double theta = 0.0;  // radians
    double depth = 0.0;  // cm
    Stiffness stiffness = Stiffness::High;

    bool operator==(const ScoopAction&) const = default;
};

struct ScoopGeometry {
    double width = 6.0;            // cm, across heading
    double travel_length = 12.0;   // cm, along heading
    double capacity_factor = 1.8;  // per-cell column cap = factor * depth
    double mouth_height = 8.0;     // cm, prism height for swept-volume scores
    double jam_threshold = 0.25;   // swept-area fraction of blocked cells
    double jam_factor = 0.0;       // collection multiplier when jammed

    OrientedRect footprint(const ScoopAction& a) const {
        return OrientedRect{{a.x, a.y}, a.theta, travel_length, width};
    }
};

struct WorkspaceConfig {
    double clearance_margin = 2.0;  // cm added around the footprint
    Vec2 reach_center{-20.0, 35.0};
    double reach_min = 0.0;
    double reach_max = 1e9;
    // Emulated planner failure: deterministic per-action coin, applied only
    // when the caller opts in (candidate generation filters geometry only).
    double planner_failure_rate = 0.0;
    std::uint64_t planner_seed = 0;
};

struct ScoopOutcome {
    double volume = 0.0;  // cm^3 collected (the reward)
    double mass = 0.0;    // g
    bool jammed = false;
    ScoopAction executed_action;
    std::map<MaterialId, double> volume_by_material;  // collected, cm^3
    double removed_volume = 0.0;                      // cm^3 taken off the grid
    double scoopable_fraction = 0.0;  // swept-area fraction on scoopable material
};

inline double measure_mass(const std::map<MaterialId, double>& volumes,
                           const MaterialCatalog& catalog) {
    double mass = 0.0;
    for (const auto& [id, vol] : volumes) {
        if (vol < 0.0) throw std::invalid_argument("measure_mass: negative volume");
        mass += vol * catalog.by_id(id).density;
    }
    return mass;
}

// Deterministic planner-failure coin: a pure function of the action, so
// re-querying the same action always answers the same way.
inline bool planner_rejects(const ScoopAction& a, const WorkspaceConfig& ws) {
    if (ws.planner_failure_rate <= 0.0) return false;
    auto q = [](double v) { return static_cast<std::uint64_t>(std::llround(v * 1024.0)); };
    const std::uint64_t h =
        mix64(mix64(ws.planner_seed, q(a.x), q(a.y)), q(a.theta * 1000.0), q(a.depth));
    return hash_unit(h) < ws.planner_failure_rate;
}

// Geometric feasibility: the margin-inflated footprint lies inside the bin
// and inside the reach annulus. When planner emulation is enabled in the
// workspace config the per-action coin is applied on top.
inline bool check_feasibility(const TerrainState& state, const ScoopAction& a,
                              const WorkspaceConfig& ws, const ScoopGeometry& geom) {
    const OrientedRect rect = geom.footprint(a);
    for (const auto& c : rect.corners(ws.clearance_margin))
        if (!state.in_bin(c)) return false;
    if (rect.min_dist(ws.reach_center) < ws.reach_min) return false;
    if (rect.max_dist(ws.reach_center) > ws.reach_max) return false;
    if (planner_rejects(a, ws)) return false;
    return true;
}

// Sweeps the footprint at a cut plane (entry height - depth). Swept columns on
// scoopable material are lowered (coverage-weighted, capped per cell); the
// collected fraction is scoopability-weighted. A swept-area fraction of
// blocked cells (unscoopable material standing above the cut plane) beyond
// jam_threshold jams the scoop: collection is scaled by jam_factor but the
// displaced columns stay removed.
inline std::pair<ScoopOutcome, TerrainState> execute_scoop(const TerrainState& state,
                                                           const ScoopAction& action,
                                                           const MaterialCatalog& catalog,
                                                           const ScoopGeometry& geom) {
    if (!state.in_bin({action.x, action.y}))
        throw std::invalid_argument("execute_scoop: entry point outside bin");
    if (action.depth <= 0.0) throw std::invalid_argument("execute_scoop: depth must be > 0");

    TerrainState next = state;
    ScoopOutcome out;
    out.executed_action = action;

    const double cell = state.spec.cell_size;
    const double cell_area = cell * cell;
    const double entry_h = state.height_at(action.x, action.y);
    const double cut = std::max(entry_h - action.depth, 0.0);
    const double cap = geom.capacity_factor * action.depth;
    const OrientedRect rect = geom.footprint(action);

    const auto [xmin, ymin, xmax, ymax] = rect.bbox();
    const long ix0 = std::max<long>(0, static_cast<long>(std::floor(xmin / cell)));
    const long iy0 = std::max<long>(0, static_cast<long>(std::floor(ymin / cell)));
    const long ix1 = std::min<long>(static_cast<long>(state.height.nx()) - 1,
                                    static_cast<long>(std::floor(xmax / cell)));
    const long iy1 = std::min<long>(static_cast<long>(state.height.ny()) - 1,
                                    static_cast<long>(std::floor(ymax / cell)));

    struct SweptCell {
        std::size_t ix, iy;
        double coverage;
    };
    std::vector<SweptCell> swept;
    double total_w = 0.0, blocked_w = 0.0, scoopable_w = 0.0;
    for (long ix = ix0; ix <= ix1; ++ix) {
        for (long iy = iy0; iy <= iy1; ++iy) {
            const Vec2 c = state.cell_center(ix, iy);
            const double w = cell_coverage(rect, c, cell);
            if (w <= 0.0) continue;
            swept.push_back({static_cast<std::size_t>(ix), static_cast<std::size_t>(iy), w});
            total_w += w;
            const MaterialSpec& mat = catalog.by_id(state.material(ix, iy));
            if (mat.scoopability > 0.0) scoopable_w += w;
            else if (state.height(ix, iy) > cut) blocked_w += w;
        }
    }
    if (total_w <= 0.0) return {out, next};

    out.scoopable_fraction = scoopable_w / total_w;
    out.jammed = (blocked_w / total_w) > geom.jam_threshold;
    const double collect_scale = out.jammed ? geom.jam_factor : 1.0;

    for (const auto& sc : swept) {
        const MaterialSpec& mat = catalog.by_id(state.material(sc.ix, sc.iy));
        if (mat.scoopability <= 0.0) continue;
        const double column = std::clamp(static_cast<double>(state.height(sc.ix, sc.iy)) - cut,
                                         0.0, cap);
        const double removal_h = column * sc.coverage;
        if (removal_h <= 0.0) continue;
        next.height(sc.ix, sc.iy) =
            static_cast<float>(static_cast<double>(next.height(sc.ix, sc.iy)) - removal_h);
        const double removed = removal_h * cell_area;
        out.removed_volume += removed;
        out.volume_by_material[mat.id] += removed * mat.scoopability * collect_scale;
    }
    for (const auto& [id, v] : out.volume_by_material) out.volume += v;
    out.mass = measure_mass(out.volume_by_material, catalog);
    return {out, next};
}

}  // namespace scoopsim
