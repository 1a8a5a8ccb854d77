#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "scoopsim/material.hpp"
#include "scoopsim/rng.hpp"
#include "scoopsim/terrain.hpp"

namespace scoopsim {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n};
    }
};

// Oblique pan-tilt camera at the bin edge. pan rotates about +z (0 looks
// along +x), tilt is the angle below horizontal.
struct CameraPose {
    Vec3 position{-55.0, 35.0, 100.0};  // cm, bin frame
    double pan = 0.0;                   // radians
    double tilt = 0.7853981633974483;   // radians below horizontal
    double focal_px = 600.0;
    int width_px = 640;
    int height_px = 480;

    Vec3 forward() const {
        return {std::cos(pan) * std::cos(tilt), std::sin(pan) * std::cos(tilt), -std::sin(tilt)};
    }
    Vec3 right() const { return {std::sin(pan), -std::cos(pan), 0.0}; }
    Vec3 image_down() const {
        const Vec3 f = forward();
        const Vec3 r = right();
        return {f.y * r.z - f.z * r.y, f.z * r.x - f.x * r.z, f.x * r.y - f.y * r.x};
    }

    Vec3 pixel_ray(double u, double v) const {
        const double cx = width_px / 2.0;
        const double cy = height_px / 2.0;
        const Vec3 d = forward() + right() * ((u - cx) / focal_px) + image_down() * ((v - cy) / focal_px);
        return d.normalized();
    }

    // Projects a world point; returns false if behind the camera or outside
    // the image.
    bool project(const Vec3& p, double& u, double& v) const {
        const Vec3 d = p - position;
        const double depth = d.dot(forward());
        if (depth <= 1e-9) return false;
        u = width_px / 2.0 + focal_px * d.dot(right()) / depth;
        v = height_px / 2.0 + focal_px * d.dot(image_down()) / depth;
        return u >= 0.0 && u <= width_px && v >= 0.0 && v <= height_px;
    }
};

struct CloudPoint {
    double x = 0.0, y = 0.0, z = 0.0;  // cm, bin frame
    Rgb color;
};

struct PointCloud {
    std::vector<CloudPoint> points;
};

// Pose sanity check: camera outside the bin footprint, above the surface, and
// the bin volume up to check_height visible in the image.
inline void validate_pose(const CameraPose& pose, const TerrainSpec& spec,
                          double check_height = 25.0) {
    check_height = std::min(check_height, spec.max_height);
    const bool over_bin = pose.position.x >= 0 && pose.position.x <= spec.bin_width &&
                          pose.position.y >= 0 && pose.position.y <= spec.bin_length;
    if (over_bin) throw std::invalid_argument("camera pose: position over the bin footprint");
    if (pose.position.z <= check_height)
        throw std::invalid_argument("camera pose: position too low");
    for (double x : {0.0, spec.bin_width}) {
        for (double y : {0.0, spec.bin_length}) {
            for (double z : {0.0, check_height}) {
                double u, v;
                if (!pose.project({x, y, z}, u, v))
                    throw std::invalid_argument("camera pose: bin corner outside frustum");
            }
        }
    }
}

namespace detail {

// First intersection of a ray with the heightmap inside the bin, via 2-D DDA
// over grid columns. Returns false if the ray exits without hitting.
inline bool raycast_heightmap(const TerrainState& state, const Vec3& origin, const Vec3& dir,
                              CloudPoint& hit, const MaterialCatalog& catalog) {
    const double cell = state.spec.cell_size;
    const double W = state.spec.bin_width;
    const double L = state.spec.bin_length;

    // Clip to the bin's bounding box in x/y.
    double t0 = 0.0, t1 = 1e18;
    auto clip = [&](double o, double d, double lo, double hi) {
        if (std::abs(d) < 1e-12) return o >= lo && o <= hi;
        double ta = (lo - o) / d, tb = (hi - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        return t0 <= t1;
    };
    if (!clip(origin.x, dir.x, 0.0, W) || !clip(origin.y, dir.y, 0.0, L)) return false;
    if (t1 <= 0.0) return false;
    t0 = std::max(t0, 0.0);

    const auto nx = static_cast<long>(state.height.nx());
    const auto ny = static_cast<long>(state.height.ny());
    Vec3 p = origin + dir * (t0 + 1e-9);
    long ix = std::clamp(static_cast<long>(std::floor(p.x / cell)), 0L, nx - 1);
    long iy = std::clamp(static_cast<long>(std::floor(p.y / cell)), 0L, ny - 1);
    const long step_x = dir.x > 0 ? 1 : -1;
    const long step_y = dir.y > 0 ? 1 : -1;
    double t = t0;

    // A ray entering through a bin side wall below the local surface is
    // blocked by the wall; the wall itself is not part of the observation.
    if (origin.z + dir.z * t0 <= state.height(ix, iy) && t0 > 0.0) return false;

    while (t <= t1 && ix >= 0 && ix < nx && iy >= 0 && iy < ny) {
        // Exit parameter of the current column.
        double tx = 1e18, ty = 1e18;
        if (std::abs(dir.x) > 1e-12)
            tx = (((dir.x > 0 ? ix + 1 : ix) * cell) - origin.x) / dir.x;
        if (std::abs(dir.y) > 1e-12)
            ty = (((dir.y > 0 ? iy + 1 : iy) * cell) - origin.y) / dir.y;
        const double t_exit = std::min({tx, ty, t1});

        const double h = state.height(ix, iy);
        const double z_in = origin.z + dir.z * t;
        const double z_out = origin.z + dir.z * t_exit;
        if (z_in <= h || z_out <= h) {
            double t_hit = t;
            if (z_in > h) {
                // Crossed the column's top surface inside this cell.
                t_hit = (h - origin.z) / dir.z;
            }
            const Vec3 q = origin + dir * t_hit;
            hit = {q.x, q.y, std::min(q.z, h), catalog.by_id(state.material(ix, iy)).color};
            return true;
        }
        if (t_exit >= t1) break;
        t = t_exit;
        if (tx < ty) ix += step_x;
        else iy += step_y;
    }
    return false;
}

}  // namespace detail

// Per-pixel ray casting against the ground-truth heightmap. Occlusion falls
// out of the cast; optional additive depth noise (sigma in cm).
inline PointCloud render_pointcloud(const TerrainState& state, const CameraPose& pose,
                                    const MaterialCatalog& catalog, double noise_sigma = 0.0,
                                    std::uint64_t noise_seed = 0) {
    validate_pose(pose, state.spec);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(pose.width_px) * pose.height_px / 2);
    std::mt19937_64 rng = make_rng(mix64(noise_seed, 0xca3e7aULL));
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int v = 0; v < pose.height_px; ++v) {
        for (int u = 0; u < pose.width_px; ++u) {
            const Vec3 dir = pose.pixel_ray(u + 0.5, v + 0.5);
            CloudPoint hit;
            if (detail::raycast_heightmap(state, pose.position, dir, hit, catalog)) {
                if (noise_sigma > 0.0) hit.z += noise(rng);
                cloud.points.push_back(hit);
            }
        }
    }
    return cloud;
}

struct CloudFilter {
    double bin_width = 90.0;
    double bin_length = 70.0;
    double min_z = -0.5;
    double max_z = 40.0;
};

// Drops points outside the bin bounds or the plausible height band,
// preserving order.
inline PointCloud filter_anomalies(const PointCloud& cloud, const CloudFilter& f) {
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) continue;
        if (p.x < 0.0 || p.x > f.bin_width || p.y < 0.0 || p.y > f.bin_length) continue;
        if (p.z < f.min_z || p.z > f.max_z) continue;
        out.points.push_back(p);
    }
    return out;
}

}  // namespace scoopsim
