#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "scoopsim/config.hpp"
#include "scoopsim/experiment.hpp"
#include "scoopsim/surrogate.hpp"
#include "scoopsim/training.hpp"

namespace fs = std::filesystem;
using namespace scoopsim;

namespace {

MaterialCatalog catalog_from(const std::string& materials_path) {
    if (materials_path.empty()) return default_catalog();
    return parse_catalog(load_json_file(materials_path));
}

void write_loss_log(const std::string& path,
                    const std::vector<std::pair<int, double>>& log) {
    std::ofstream os(path);
    os << "step\tloss\n";
    for (const auto& [step, loss] : log) os << step << '\t' << detail::fmt_full(loss) << '\n';
}

int cmd_generate_terrain(const std::string& spec_path, const std::string& out_path,
                         std::optional<std::uint64_t> seed, const std::string& materials) {
    auto catalog = catalog_from(materials);
    TerrainSpec spec = parse_terrain_spec(load_json_file(spec_path), catalog);
    if (seed) spec.seed = *seed;
    const TerrainState state = synthesize_terrain(spec, catalog);
    save_terrain_file(out_path, state);
    std::cout << "terrain " << state.height.nx() << "x" << state.height.ny() << " cells -> "
              << out_path << "\n";
    return 0;
}

int cmd_collect(const std::string& config_path, const std::string& out_path,
                std::optional<std::uint64_t> seed, const std::string& materials) {
    auto catalog = catalog_from(materials);
    const std::string base_dir = fs::path(config_path).parent_path().string();
    CollectPlan plan = parse_collect(load_json_file(config_path), catalog, base_dir);
    if (seed) plan.config.seed = *seed;
    const TrainingDataset dataset = collect_training_data(plan.sources, catalog, plan.config);
    save_dataset_file(out_path, dataset);
    std::cout << "collected " << dataset.total_records() << " records over "
              << dataset.terrains.size() << " terrains -> " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& out_path,
              const std::string& config_path, std::optional<int> folds, bool joint,
              std::optional<std::uint64_t> seed, const std::string& materials) {
    auto catalog = catalog_from(materials);
    TrainPipelineConfig cfg;
    if (!config_path.empty()) cfg = parse_training(load_json_file(config_path));
    if (folds) cfg.fold_count = *folds;
    if (joint) cfg.joint = true;
    if (seed) cfg.seed = *seed;

    const TrainingDataset dataset = load_dataset_file(data_path);
    if (dataset.patch_size != cfg.arch.patch) {
        std::cerr << "note: adopting dataset patch size " << dataset.patch_size << "\n";
        cfg.arch.patch = dataset.patch_size;
        cfg.arch.validate();
    }
    const TrainArtifacts art = run_training(dataset, catalog, cfg);
    save_model_file(out_path, art.model);
    write_loss_log(out_path + ".mean_loss.tsv", art.mean_loss_log);
    write_loss_log(out_path + ".kernel_loss.tsv", art.kernel_loss_log);
    std::cout << "model -> " << out_path << "  (signal_var "
              << art.model.kernel.signal_var() << ", noise_var "
              << art.model.kernel.noise_var() << ")\n";
    return 0;
}

int cmd_run_episode(const std::string& config_path, const std::string& model_path,
                    const std::string& out_path, std::optional<std::uint64_t> seed,
                    const std::string& materials, const std::string& rankings_dir,
                    const std::string& observations_dir) {
    auto catalog = catalog_from(materials);
    const std::string base_dir = fs::path(config_path).parent_path().string();
    ScenarioConfig cfg = parse_scenario(load_json_file(config_path), catalog, base_dir);
    if (seed) cfg.seed = *seed;

    std::optional<SurrogateModel> model;
    if (cfg.policy != PolicyKind::VolMax) {
        if (model_path.empty())
            throw std::runtime_error("policy '" + to_string(cfg.policy) +
                                     "' needs --model <checkpoint>");
        model = load_model_file(model_path);
    }

    AttemptObserver observer;
    if (!rankings_dir.empty() || !observations_dir.empty()) {
        if (!rankings_dir.empty()) fs::create_directories(rankings_dir);
        if (!observations_dir.empty()) fs::create_directories(observations_dir);
        observer = [&](int attempt, const RasterObservation& raster, const CandidateSet& cands,
                       const Ranking& ranking) {
            if (!observations_dir.empty())
                save_raster_file((fs::path(observations_dir) /
                                  ("obs_attempt" + std::to_string(attempt) + ".bin"))
                                     .string(),
                                 raster);
            if (rankings_dir.empty()) return;
            std::ofstream os(fs::path(rankings_dir) /
                             ("rank_attempt" + std::to_string(attempt) + ".tsv"));
            os << "rank\tcandidate\tx\ty\ttheta\tdepth\tmu\tsigma\tscore\n";
            for (std::size_t r = 0; r < ranking.order.size(); ++r) {
                const std::size_t i = ranking.order[r];
                const auto& a = cands.entries[i].action;
                const auto& s = ranking.scores[i];
                os << r << '\t' << i << '\t' << a.x << '\t' << a.y << '\t' << a.theta << '\t'
                   << a.depth << '\t' << s.mean << '\t' << s.sigma << '\t' << s.score << '\n';
            }
        };
    }

    const EpisodeResult result =
        run_episode(cfg, model ? &*model : nullptr, catalog, observer);
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
    write_episode(os, result);
    std::cout << "episode " << cfg.scenario_id << " policy " << to_string(cfg.policy)
              << ": total " << fmt_grams(result.total_mass) << " g over "
              << result.attempts.size() << " attempts ("
              << (result.aborted ? "aborted: " + result.abort_reason : "ok") << ", "
              << result.wall_clock_sec << " s) -> " << out_path << "\n";
    return 0;
}

int cmd_run_experiment(const std::string& config_path, const std::string& model_path,
                       const std::string& out_dir, std::optional<std::uint64_t> seed,
                       const std::string& materials) {
    auto catalog = catalog_from(materials);
    const std::string base_dir = fs::path(config_path).parent_path().string();
    ExperimentPlan plan = parse_experiment(load_json_file(config_path), catalog, base_dir);
    if (seed) plan.config.master_seed = *seed;
    if (!model_path.empty()) plan.model_path = model_path;
    if (!out_dir.empty()) plan.out_dir = out_dir;

    bool needs_model = false;
    for (PolicyKind p : plan.config.policies) needs_model |= p != PolicyKind::VolMax;
    std::optional<SurrogateModel> model;
    if (needs_model) {
        if (plan.model_path.empty())
            throw std::runtime_error("experiment includes model policies; provide --model");
        const std::string resolved = fs::path(plan.model_path).is_absolute() || base_dir.empty()
                                         ? plan.model_path
                                         : (fs::path(base_dir) / plan.model_path).string();
        model = load_model_file(fs::exists(resolved) ? resolved : plan.model_path);
    }

    const ExperimentSummary summary =
        run_experiment(plan.config, model ? &*model : nullptr, catalog, plan.out_dir);
    std::ofstream os(fs::path(plan.out_dir) / "summary.tsv");
    write_summary(os, summary);
    std::cout << format_results_table(summary);
    std::cout << "episodes and summary.tsv -> " << plan.out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& results_dir, const std::string& out_path) {
    const ExperimentSummary summary = summarize_results_dir(results_dir);
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
        write_summary(os, summary);
    }
    std::cout << format_results_table(summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scoopsim: desk-scale scooping autonomy simulator"};
    app.require_subcommand(1);

    std::string materials;
    app.add_option("--materials", materials, "material catalog JSON (default: built-in)");
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the config seed");
    std::string global_config;
    app.add_option("--config", global_config, "config file for the chosen subcommand");

    std::string spec_path, out_path, config_path, data_path, model_path, results_dir,
        rankings_dir, observations_dir;
    std::optional<int> folds;
    bool joint = false;

    auto* gen = app.add_subcommand("generate-terrain", "synthesize a terrain file from a spec");
    gen->add_option("--spec", spec_path, "terrain spec JSON")->required();
    gen->add_option("--out", out_path, "output terrain raster file")->required();

    auto* collect = app.add_subcommand("collect-data", "execute scoops on training terrains");
    collect->add_option("--config", config_path, "collection config JSON")->required();
    collect->add_option("--out", out_path, "output dataset file")->required();

    auto* train = app.add_subcommand("train", "fold-split training of the surrogate");
    train->add_option("--data", data_path, "training dataset file")->required();
    train->add_option("--out", out_path, "output model checkpoint")->required();
    train->add_option("--config", config_path, "training config JSON");
    train->add_option("--folds", folds, "fold count override");
    train->add_flag("--joint", joint, "ablation: no fold split (in-distribution residuals)");

    auto* episode = app.add_subcommand("run-episode", "run one scooping episode");
    episode->add_option("--config", config_path, "scenario config JSON")->required();
    episode->add_option("--model", model_path, "model checkpoint");
    episode->add_option("--out", out_path, "episode record TSV")->required();
    episode->add_option("--dump-rankings", rankings_dir, "per-attempt ranking dumps");
    episode->add_option("--dump-observations", observations_dir,
                        "per-attempt observation raster dumps");

    auto* experiment = app.add_subcommand("run-experiment", "scenario x policy x seed sweep");
    experiment->add_option("--config", config_path, "experiment config JSON")->required();
    experiment->add_option("--model", model_path, "model checkpoint override");
    experiment->add_option("--out", out_path, "results directory override");

    auto* eval = app.add_subcommand("eval", "aggregate episode records into the results table");
    eval->add_option("--results", results_dir, "results directory")->required();
    eval->add_option("--out", out_path, "summary TSV path");

    CLI11_PARSE(app, argc, argv);
    if (config_path.empty()) config_path = global_config;

    try {
        if (gen->parsed()) return cmd_generate_terrain(spec_path, out_path, seed, materials);
        if (collect->parsed()) return cmd_collect(config_path, out_path, seed, materials);
        if (train->parsed())
            return cmd_train(data_path, out_path, config_path, folds, joint, seed, materials);
        if (episode->parsed())
            return cmd_run_episode(config_path, model_path, out_path, seed, materials,
                                   rankings_dir, observations_dir);
        if (experiment->parsed())
            return cmd_run_experiment(config_path, model_path, out_path, seed, materials);
        if (eval->parsed()) return cmd_eval(results_dir, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
