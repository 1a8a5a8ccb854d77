#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scoopsim/raster.hpp"
#include "scoopsim/terrain.hpp"

namespace scoopsim {
namespace bin_io {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("binary read: truncated stream");
    return v;
}

inline void write_magic(std::ostream& os, const char magic[4], std::uint32_t version) {
    os.write(magic, 4);
    write_pod(os, version);
}

inline std::uint32_t read_magic(std::istream& is, const char magic[4]) {
    char got[4];
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw std::runtime_error("binary read: bad magic header");
    return read_pod<std::uint32_t>(is);
}

}  // namespace bin_io

// Terrain raster file: "TRN1" header (dims, cell size), then a float32 height
// plane and a uint8 material-id plane, row-major in x.
inline void save_terrain(std::ostream& os, const TerrainState& state) {
    bin_io::write_magic(os, "TRN1", 1);
    bin_io::write_pod(os, static_cast<std::uint32_t>(state.height.nx()));
    bin_io::write_pod(os, static_cast<std::uint32_t>(state.height.ny()));
    bin_io::write_pod(os, static_cast<float>(state.spec.cell_size));
    bin_io::write_pod(os, static_cast<float>(state.spec.max_height));
    os.write(reinterpret_cast<const char*>(state.height.raw().data()),
             static_cast<std::streamsize>(state.height.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(state.material.raw().data()),
             static_cast<std::streamsize>(state.material.size() * sizeof(MaterialId)));
}

inline TerrainState load_terrain(std::istream& is) {
    const std::uint32_t version = bin_io::read_magic(is, "TRN1");
    if (version != 1) throw std::runtime_error("terrain file: unsupported version");
    const auto nx = bin_io::read_pod<std::uint32_t>(is);
    const auto ny = bin_io::read_pod<std::uint32_t>(is);
    const auto cell = bin_io::read_pod<float>(is);
    const auto max_h = bin_io::read_pod<float>(is);
    if (nx == 0 || ny == 0 || cell <= 0) throw std::runtime_error("terrain file: bad header");
    TerrainState state;
    state.spec.cell_size = cell;
    state.spec.bin_width = nx * static_cast<double>(cell);
    state.spec.bin_length = ny * static_cast<double>(cell);
    state.spec.max_height = max_h;
    state.height = Grid<float>(nx, ny);
    state.material = Grid<MaterialId>(nx, ny);
    is.read(reinterpret_cast<char*>(state.height.raw().data()),
            static_cast<std::streamsize>(state.height.size() * sizeof(float)));
    is.read(reinterpret_cast<char*>(state.material.raw().data()),
            static_cast<std::streamsize>(state.material.size() * sizeof(MaterialId)));
    if (!is) throw std::runtime_error("terrain file: truncated");
    return state;
}

inline void save_terrain_file(const std::string& path, const TerrainState& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_terrain(os, state);
}

inline TerrainState load_terrain_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_terrain(is);
}

// Observation raster file: terrain layout plus a validity plane (uint8) and
// an RGB plane (uint8 per channel).
inline void save_raster(std::ostream& os, const RasterObservation& raster) {
    bin_io::write_magic(os, "OBS1", 1);
    bin_io::write_pod(os, static_cast<std::uint32_t>(raster.nx()));
    bin_io::write_pod(os, static_cast<std::uint32_t>(raster.ny()));
    bin_io::write_pod(os, static_cast<float>(raster.cell_size));
    os.write(reinterpret_cast<const char*>(raster.depth.raw().data()),
             static_cast<std::streamsize>(raster.depth.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(raster.valid.raw().data()),
             static_cast<std::streamsize>(raster.valid.size()));
    std::vector<std::uint8_t> rgb;
    rgb.reserve(raster.color.size() * 3);
    for (const auto& c : raster.color.raw()) {
        for (double ch : {c.r, c.g, c.b})
            rgb.push_back(static_cast<std::uint8_t>(std::clamp(ch, 0.0, 1.0) * 255.0 + 0.5));
    }
    os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

inline RasterObservation load_raster(std::istream& is) {
    const std::uint32_t version = bin_io::read_magic(is, "OBS1");
    if (version != 1) throw std::runtime_error("raster file: unsupported version");
    const auto nx = bin_io::read_pod<std::uint32_t>(is);
    const auto ny = bin_io::read_pod<std::uint32_t>(is);
    const auto cell = bin_io::read_pod<float>(is);
    if (nx == 0 || ny == 0 || cell <= 0) throw std::runtime_error("raster file: bad header");
    RasterObservation r;
    r.cell_size = cell;
    r.depth = Grid<float>(nx, ny);
    r.valid = Grid<std::uint8_t>(nx, ny);
    r.color = Grid<Rgb>(nx, ny);
    is.read(reinterpret_cast<char*>(r.depth.raw().data()),
            static_cast<std::streamsize>(r.depth.size() * sizeof(float)));
    is.read(reinterpret_cast<char*>(r.valid.raw().data()),
            static_cast<std::streamsize>(r.valid.size()));
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(nx) * ny * 3);
    is.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!is) throw std::runtime_error("raster file: truncated");
    for (std::size_t i = 0; i < r.color.size(); ++i)
        r.color.raw()[i] = {rgb[3 * i] / 255.0, rgb[3 * i + 1] / 255.0, rgb[3 * i + 2] / 255.0};
    return r;
}

inline void save_raster_file(const std::string& path, const RasterObservation& raster) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_raster(os, raster);
}

inline RasterObservation load_raster_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_raster(is);
}

}  // namespace scoopsim
