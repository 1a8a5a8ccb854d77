#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "scoopsim/dataset.hpp"
#include "scoopsim/episode.hpp"
#include "scoopsim/experiment.hpp"
#include "scoopsim/training.hpp"

namespace scoopsim {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("bad JSON in " + path + ": " + e.what());
    }
}

inline MaterialCatalog parse_catalog(const json& j) {
    if (!j.contains("materials")) return default_catalog();
    std::vector<MaterialSpec> mats;
    for (const auto& m : j.at("materials")) {
        MaterialSpec spec;
        spec.id = m.at("id").get<MaterialId>();
        spec.name = m.at("name").get<std::string>();
        spec.scoopability = m.at("scoopability").get<double>();
        spec.density = m.at("density").get<double>();
        spec.roughness_amplitude = m.value("roughness_amplitude", 0.0);
        spec.roughness_length = m.value("roughness_length", 1.0);
        if (m.contains("color")) {
            const auto& c = m.at("color");
            spec.color = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
        }
        mats.push_back(std::move(spec));
    }
    return MaterialCatalog(std::move(mats));
}

inline TerrainSpec parse_terrain_spec(const json& j, const MaterialCatalog& catalog) {
    TerrainSpec spec;
    if (j.contains("bin")) {
        const auto& b = j.at("bin");
        spec.bin_width = b.value("width_cm", spec.bin_width);
        spec.bin_length = b.value("length_cm", spec.bin_length);
        spec.cell_size = b.value("cell_size_cm", spec.cell_size);
        spec.base_height = b.value("base_height_cm", spec.base_height);
        spec.max_height = b.value("max_height_cm", spec.max_height);
    }
    spec.base_material = catalog.by_name(j.value("base_material", "regolith")).id;
    spec.seed = j.value("seed", 0ULL);
    for (const auto& r : j.value("regions", json::array())) {
        MaterialRegion region;
        region.material = catalog.by_name(r.at("material").get<std::string>()).id;
        region.raise_cm = r.value("raise_cm", 0.0);
        if (r.contains("rect")) {
            const auto& q = r.at("rect");  // [x0, y0, x1, y1]
            const double x0 = q.at(0), y0 = q.at(1), x1 = q.at(2), y1 = q.at(3);
            region.polygon = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
        } else {
            for (const auto& p : r.at("polygon"))
                region.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
        spec.regions.push_back(std::move(region));
    }
    for (const auto& m : j.value("mounds", json::array()))
        spec.mounds.push_back({m.at("x").get<double>(), m.at("y").get<double>(),
                               m.at("radius_cm").get<double>(), m.at("height_cm").get<double>()});
    return spec;
}

inline PerceptionConfig parse_perception(const json& j) {
    PerceptionConfig cfg;
    if (j.contains("camera")) {
        const auto& c = j.at("camera");
        if (c.contains("position"))
            cfg.pose.position = {c.at("position").at(0), c.at("position").at(1),
                                 c.at("position").at(2)};
        cfg.pose.pan = c.value("pan", cfg.pose.pan);
        cfg.pose.tilt = c.value("tilt", cfg.pose.tilt);
        cfg.pose.focal_px = c.value("focal_px", cfg.pose.focal_px);
        cfg.pose.width_px = c.value("width_px", cfg.pose.width_px);
        cfg.pose.height_px = c.value("height_px", cfg.pose.height_px);
    }
    cfg.noise_sigma = j.value("noise_sigma_cm", cfg.noise_sigma);
    cfg.fill_radius = j.value("fill_radius_cells", cfg.fill_radius);
    return cfg;
}

inline CandidateConfig parse_candidates(const json& j) {
    CandidateConfig cfg;
    cfg.grid_pitch = j.value("grid_pitch_cm", cfg.grid_pitch);
    cfg.yaw_count = j.value("yaw_count", cfg.yaw_count);
    if (j.contains("depth_set_cm")) cfg.depth_set = j.at("depth_set_cm").get<std::vector<double>>();
    cfg.max_slope = j.value("max_slope", cfg.max_slope);
    cfg.patch.size = j.value("patch_size", cfg.patch.size);
    cfg.patch.extent_cm = j.value("patch_extent_cm", cfg.patch.extent_cm);
    return cfg;
}

inline ScoopGeometry parse_scoop(const json& j) {
    ScoopGeometry g;
    g.width = j.value("width_cm", g.width);
    g.travel_length = j.value("travel_length_cm", g.travel_length);
    g.capacity_factor = j.value("capacity_factor", g.capacity_factor);
    g.mouth_height = j.value("mouth_height_cm", g.mouth_height);
    g.jam_threshold = j.value("jam_threshold", g.jam_threshold);
    g.jam_factor = j.value("jam_factor", g.jam_factor);
    return g;
}

inline WorkspaceConfig parse_workspace(const json& j) {
    WorkspaceConfig ws;
    ws.clearance_margin = j.value("clearance_margin_cm", ws.clearance_margin);
    if (j.contains("reach_center"))
        ws.reach_center = {j.at("reach_center").at(0), j.at("reach_center").at(1)};
    ws.reach_min = j.value("reach_min_cm", ws.reach_min);
    ws.reach_max = j.value("reach_max_cm", ws.reach_max);
    return ws;
}

// Scenario file: terrain (inline or by file), policy, budget, failure rate,
// beta, plus perception/candidates/scoop/workspace blocks.
inline ScenarioConfig parse_scenario(const json& j, const MaterialCatalog& catalog,
                                     const std::string& base_dir = "") {
    ScenarioConfig cfg;
    cfg.scenario_id = j.value("id", cfg.scenario_id);
    if (j.contains("terrain_file")) {
        const std::string path =
            base_dir.empty() ? j.at("terrain_file").get<std::string>()
                             : base_dir + "/" + j.at("terrain_file").get<std::string>();
        cfg.terrain = parse_terrain_spec(load_json_file(path), catalog);
    } else {
        cfg.terrain = parse_terrain_spec(j.at("terrain"), catalog);
    }
    if (j.contains("policy")) cfg.policy = policy_from_string(j.at("policy").get<std::string>());
    cfg.budget = j.value("budget", cfg.budget);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.planner_failure_rate = j.value("planner_failure_rate", cfg.planner_failure_rate);
    cfg.beta = j.value("beta", cfg.beta);
    if (j.contains("perception")) cfg.perception = parse_perception(j.at("perception"));
    if (j.contains("candidates")) cfg.candidates = parse_candidates(j.at("candidates"));
    if (j.contains("scoop")) cfg.scoop = parse_scoop(j.at("scoop"));
    if (j.contains("workspace")) cfg.workspace = parse_workspace(j.at("workspace"));
    return cfg;
}

inline MeanTrainConfig parse_mean_train(const json& j) {
    MeanTrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.lr_decay = j.value("lr_decay", cfg.lr_decay);
    return cfg;
}

inline KernelTrainConfig parse_kernel_train(const json& j) {
    KernelTrainConfig cfg;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.batch_episodes = j.value("batch_episodes", cfg.batch_episodes);
    cfg.max_support = j.value("max_support", cfg.max_support);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.episodic = j.value("episodic", cfg.episodic);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
    return cfg;
}

inline EncoderArch parse_arch(const json& j) {
    EncoderArch a;
    a.patch = j.value("patch", a.patch);
    a.conv1 = j.value("conv1", a.conv1);
    a.conv2 = j.value("conv2", a.conv2);
    a.ksize = j.value("ksize", a.ksize);
    a.hidden = j.value("hidden", a.hidden);
    a.features = j.value("features", a.features);
    a.validate();
    return a;
}

inline TrainPipelineConfig parse_training(const json& j) {
    TrainPipelineConfig cfg;
    if (j.contains("arch")) cfg.arch = parse_arch(j.at("arch"));
    cfg.mean_hidden = j.value("mean_hidden", cfg.mean_hidden);
    cfg.fold_count = j.value("folds", cfg.fold_count);
    cfg.joint = j.value("joint", cfg.joint);
    cfg.seed = j.value("seed", 0ULL);
    if (j.contains("mean")) cfg.mean = parse_mean_train(j.at("mean"));
    if (j.contains("kernel")) cfg.kernel = parse_kernel_train(j.at("kernel"));
    return cfg;
}

// Collection file: list of terrain spec files plus sampling parameters.
struct CollectPlan {
    std::vector<TerrainSource> sources;
    CollectConfig config;
};

inline CollectPlan parse_collect(const json& j, const MaterialCatalog& catalog,
                                 const std::string& base_dir = "") {
    CollectPlan plan;
    for (const auto& t : j.at("terrains")) {
        TerrainSource src;
        if (t.contains("file")) {
            const std::string path = base_dir.empty()
                                         ? t.at("file").get<std::string>()
                                         : base_dir + "/" + t.at("file").get<std::string>();
            src.id = t.value("id", std::filesystem::path(path).stem().string());
            src.spec = parse_terrain_spec(load_json_file(path), catalog);
        } else {
            src.id = t.at("id").get<std::string>();
            src.spec = parse_terrain_spec(t, catalog);
        }
        plan.sources.push_back(std::move(src));
    }
    plan.config.scoops_per_terrain = j.value("scoops_per_terrain", 200);
    plan.config.resets_per_terrain = j.value("resets_per_terrain", 4);
    plan.config.seed = j.value("seed", 0ULL);
    if (j.contains("perception")) plan.config.perception = parse_perception(j.at("perception"));
    if (j.contains("candidates")) plan.config.candidates = parse_candidates(j.at("candidates"));
    if (j.contains("scoop")) plan.config.scoop = parse_scoop(j.at("scoop"));
    if (j.contains("workspace")) plan.config.workspace = parse_workspace(j.at("workspace"));
    return plan;
}

struct ExperimentPlan {
    ExperimentConfig config;
    std::string model_path;
    std::string out_dir = "results";
};

inline ExperimentPlan parse_experiment(const json& j, const MaterialCatalog& catalog,
                                       const std::string& base_dir = "") {
    ExperimentPlan plan;
    for (const auto& s : j.at("scenarios")) {
        if (s.is_string()) {
            const std::string path =
                base_dir.empty() ? s.get<std::string>() : base_dir + "/" + s.get<std::string>();
            plan.config.scenarios.push_back(
                parse_scenario(load_json_file(path), catalog,
                               std::filesystem::path(path).parent_path().string()));
        } else {
            plan.config.scenarios.push_back(parse_scenario(s, catalog, base_dir));
        }
    }
    if (j.contains("policies")) {
        plan.config.policies.clear();
        for (const auto& p : j.at("policies"))
            plan.config.policies.push_back(policy_from_string(p.get<std::string>()));
    }
    plan.config.runs = j.value("runs", plan.config.runs);
    plan.config.master_seed = j.value("seed", 0ULL);
    plan.model_path = j.value("model", "");
    plan.out_dir = j.value("out_dir", plan.out_dir);
    return plan;
}

}  // namespace scoopsim
