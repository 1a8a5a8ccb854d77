#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "scoopsim/candidates.hpp"
#include "scoopsim/io.hpp"
#include "scoopsim/perception.hpp"
#include "scoopsim/rng.hpp"

namespace scoopsim {

struct TrainingRecord {
    Patch patch;
    ScoopAction action;
    double reward = 0.0;  // cm^3
};

struct TerrainDataset {
    std::string terrain_id;
    std::vector<std::string> material_names;
    std::vector<TrainingRecord> records;
};

struct TrainingDataset {
    int patch_size = 32;
    std::vector<TerrainDataset> terrains;

    std::size_t total_records() const {
        std::size_t n = 0;
        for (const auto& t : terrains) n += t.records.size();
        return n;
    }
};

struct CollectConfig {
    int scoops_per_terrain = 200;  // N
    int resets_per_terrain = 4;    // reseeded synthesis passes per terrain
    PerceptionConfig perception;
    CandidateConfig candidates;
    WorkspaceConfig workspace;
    ScoopGeometry scoop;
    std::uint64_t seed = 0;
};

struct TerrainSource {
    std::string id;
    TerrainSpec spec;
};

// For each training terrain: synthesize (reseeded per reset), run perception
// once per reset, sample feasible candidates uniformly without replacement,
// and execute each on a fresh copy of the pristine terrain.
inline TrainingDataset collect_training_data(const std::vector<TerrainSource>& sources,
                                             const MaterialCatalog& catalog,
                                             const CollectConfig& cfg) {
    TrainingDataset dataset;
    dataset.patch_size = cfg.candidates.patch.size;
    const int resets = std::max(cfg.resets_per_terrain, 1);

    for (std::size_t ti = 0; ti < sources.size(); ++ti) {
        TerrainDataset td;
        td.terrain_id = sources[ti].id;
        td.material_names.push_back(catalog.by_id(sources[ti].spec.base_material).name);
        for (const auto& r : sources[ti].spec.regions) {
            const std::string& name = catalog.by_id(r.material).name;
            if (std::find(td.material_names.begin(), td.material_names.end(), name) ==
                td.material_names.end())
                td.material_names.push_back(name);
        }

        for (int reset = 0; reset < resets; ++reset) {
            int want = cfg.scoops_per_terrain / resets +
                       (reset < cfg.scoops_per_terrain % resets ? 1 : 0);
            if (want == 0) continue;
            TerrainSpec spec = sources[ti].spec;
            spec.seed = mix64(spec.seed, cfg.seed, 0xc0 + reset);
            const TerrainState state = synthesize_terrain(spec, catalog);
            const RasterObservation raster =
                perceive(state, cfg.perception, catalog, mix64(spec.seed, 0x0b5eULL));
            const CandidateSet cands =
                generate_candidates(raster, state, cfg.workspace, cfg.scoop, cfg.candidates);
            if (cands.size() < static_cast<std::size_t>(want))
                throw std::runtime_error("collect_training_data: too few feasible candidates");

            std::vector<std::size_t> order(cands.size());
            std::iota(order.begin(), order.end(), 0);
            auto rng = make_rng(mix64(cfg.seed, ti, 0xda7a + reset));
            std::shuffle(order.begin(), order.end(), rng);

            for (int s = 0; s < want; ++s) {
                const std::size_t idx = order[s];
                auto [outcome, next] =
                    execute_scoop(state, cands.entries[idx].action, catalog, cfg.scoop);
                td.records.push_back({cands.patch_for(idx), cands.entries[idx].action,
                                      outcome.volume});
            }
        }
        dataset.terrains.push_back(std::move(td));
    }
    return dataset;
}

// Record file "SDS1": header (patch size, terrain count), then per terrain its
// id, material names, and records (action tuple, reward, depth plane f32,
// color planes f32).
inline void save_dataset(std::ostream& os, const TrainingDataset& dataset) {
    bin_io::write_magic(os, "SDS1", 1);
    bin_io::write_pod(os, static_cast<std::int32_t>(dataset.patch_size));
    bin_io::write_pod(os, static_cast<std::uint32_t>(dataset.terrains.size()));
    auto write_str = [&os](const std::string& s) {
        bin_io::write_pod(os, static_cast<std::uint32_t>(s.size()));
        os.write(s.data(), static_cast<std::streamsize>(s.size()));
    };
    const int P = dataset.patch_size;
    for (const auto& t : dataset.terrains) {
        write_str(t.terrain_id);
        bin_io::write_pod(os, static_cast<std::uint32_t>(t.material_names.size()));
        for (const auto& m : t.material_names) write_str(m);
        bin_io::write_pod(os, static_cast<std::uint32_t>(t.records.size()));
        for (const auto& r : t.records) {
            bin_io::write_pod(os, r.action.x);
            bin_io::write_pod(os, r.action.y);
            bin_io::write_pod(os, r.action.theta);
            bin_io::write_pod(os, r.action.depth);
            bin_io::write_pod(os, static_cast<std::uint8_t>(r.action.stiffness));
            bin_io::write_pod(os, r.reward);
            os.write(reinterpret_cast<const char*>(r.patch.depth.data()),
                     static_cast<std::streamsize>(sizeof(float) * P * P));
            for (const auto& c : r.patch.color)
                os.write(reinterpret_cast<const char*>(c.data()),
                         static_cast<std::streamsize>(sizeof(float) * P * P));
        }
    }
}

inline TrainingDataset load_dataset(std::istream& is) {
    const std::uint32_t version = bin_io::read_magic(is, "SDS1");
    if (version != 1) throw std::runtime_error("dataset file: unsupported version");
    TrainingDataset dataset;
    dataset.patch_size = bin_io::read_pod<std::int32_t>(is);
    if (dataset.patch_size < 2 || dataset.patch_size > 4096)
        throw std::runtime_error("dataset file: bad patch size");
    const auto terrain_count = bin_io::read_pod<std::uint32_t>(is);
    auto read_str = [&is] {
        const auto n = bin_io::read_pod<std::uint32_t>(is);
        std::string s(n, '\0');
        is.read(s.data(), n);
        if (!is) throw std::runtime_error("dataset file: truncated");
        return s;
    };
    const int P = dataset.patch_size;
    for (std::uint32_t ti = 0; ti < terrain_count; ++ti) {
        TerrainDataset t;
        t.terrain_id = read_str();
        const auto mats = bin_io::read_pod<std::uint32_t>(is);
        for (std::uint32_t m = 0; m < mats; ++m) t.material_names.push_back(read_str());
        const auto recs = bin_io::read_pod<std::uint32_t>(is);
        for (std::uint32_t r = 0; r < recs; ++r) {
            TrainingRecord rec;
            rec.action.x = bin_io::read_pod<double>(is);
            rec.action.y = bin_io::read_pod<double>(is);
            rec.action.theta = bin_io::read_pod<double>(is);
            rec.action.depth = bin_io::read_pod<double>(is);
            rec.action.stiffness = static_cast<Stiffness>(bin_io::read_pod<std::uint8_t>(is));
            rec.reward = bin_io::read_pod<double>(is);
            rec.patch.depth.resize(P, P);
            is.read(reinterpret_cast<char*>(rec.patch.depth.data()),
                    static_cast<std::streamsize>(sizeof(float) * P * P));
            for (auto& c : rec.patch.color) {
                c.resize(P, P);
                is.read(reinterpret_cast<char*>(c.data()),
                        static_cast<std::streamsize>(sizeof(float) * P * P));
            }
            rec.patch.action_depth = rec.action.depth;
            rec.patch.stiffness = rec.action.stiffness;
            if (!is) throw std::runtime_error("dataset file: truncated");
            t.records.push_back(std::move(rec));
        }
        dataset.terrains.push_back(std::move(t));
    }
    return dataset;
}

inline void save_dataset_file(const std::string& path, const TrainingDataset& dataset) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_dataset(os, dataset);
}

inline TrainingDataset load_dataset_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_dataset(is);
}

}  // namespace scoopsim
