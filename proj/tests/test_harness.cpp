#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scoopsim/config.hpp"
#include "scoopsim/episode.hpp"
#include "scoopsim/experiment.hpp"

using namespace scoopsim;

namespace {

EncoderArch tiny_arch() {
    EncoderArch a;
    a.patch = 12;
    a.conv1 = 2;
    a.conv2 = 3;
    a.hidden = 8;
    a.features = 6;
    return a;
}

ScenarioConfig tiny_scenario(PolicyKind policy, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.scenario_id = "tiny";
    cfg.policy = policy;
    cfg.seed = seed;
    cfg.budget = 3;
    cfg.terrain.base_material = 8;  // regolith
    cfg.terrain.seed = 5;
    cfg.terrain.mounds.push_back({30, 35, 8, 3});
    cfg.candidates.patch.size = 12;
    cfg.candidates.patch.extent_cm = 8.0;
    cfg.candidates.grid_pitch = 10.0;
    cfg.perception.pose.width_px = 320;
    cfg.perception.pose.height_px = 240;
    cfg.perception.pose.focal_px = 300.0;
    return cfg;
}

SurrogateModel tiny_model(std::uint64_t seed) { return make_surrogate(tiny_arch(), 8, seed); }

}  // namespace

TEST_CASE("run_episode: exact budget, growing support, per-attempt semantics") {
    auto cat = default_catalog();
    auto model = tiny_model(404);
    auto cfg = tiny_scenario(PolicyKind::Adaptive, 42);
    auto result = run_episode(cfg, &model, cat);
    REQUIRE_FALSE(result.aborted);
    REQUIRE(result.attempts.size() == 3);
    CHECK(result.support.size() == 3);
    double mass = 0.0, volume = 0.0;
    for (std::size_t i = 0; i < result.attempts.size(); ++i) {
        CHECK(result.attempts[i].attempt == static_cast<int>(i) + 1);
        CHECK(result.support[i].reward == result.attempts[i].volume);
        mass += result.attempts[i].mass;
        volume += result.attempts[i].volume;
    }
    CHECK(result.total_mass == doctest::Approx(mass).epsilon(1e-12));
    CHECK(result.total_volume == doctest::Approx(volume).epsilon(1e-12));
}

TEST_CASE("run_episode matches a manual replay of the deployment loop") {
    auto cat = default_catalog();
    auto model = tiny_model(405);
    auto cfg = tiny_scenario(PolicyKind::Adaptive, 77);
    auto result = run_episode(cfg, &model, cat);
    REQUIRE_FALSE(result.aborted);

    // Manual loop with the same derived seeds: observe after the previous
    // mutation, rank with support of size n-1, fall back, execute, append.
    TerrainSpec spec = cfg.terrain;
    spec.seed = mix64(spec.seed, cfg.seed, 0xe515ULL);
    TerrainState state = synthesize_terrain(spec, cat);
    WorkspaceConfig ws = cfg.workspace;
    ws.planner_failure_rate = cfg.planner_failure_rate;
    ws.planner_seed = mix64(cfg.seed, 0x91a2ULL);
    SupportSet support(3);
    for (int n = 1; n <= cfg.budget; ++n) {
        CHECK(support.size() == static_cast<std::size_t>(n - 1));
        auto raster = perceive(state, cfg.perception, cat, mix64(cfg.seed, 0x0b5ULL, n));
        auto cands = generate_candidates(raster, state, ws, cfg.scoop, cfg.candidates);
        PolicyContext ctx;
        ctx.model = &model;
        ctx.beta = cfg.beta;
        auto ranking =
            select_action(cfg.policy, ctx, cands, support, mix64(cfg.seed, 0x7b2ULL, n));
        auto fb = fallback_select(ranking, [&](std::size_t i) {
            return check_feasibility(state, cands.entries[i].action, ws, cfg.scoop);
        });
        auto [outcome, next] = execute_scoop(state, cands.entries[fb.candidate].action, cat,
                                             cfg.scoop);
        state = std::move(next);
        support.append({cands.patch_for(fb.candidate), cands.entries[fb.candidate].action,
                        outcome.volume});

        const auto& rec = result.attempts[static_cast<std::size_t>(n - 1)];
        CHECK(rec.action == cands.entries[fb.candidate].action);
        CHECK(rec.volume == outcome.volume);
        CHECK(rec.candidate_count == cands.size());
    }
}

TEST_CASE("run_episode: deterministic byte-for-byte per seed") {
    auto cat = default_catalog();
    auto model = tiny_model(406);
    auto cfg = tiny_scenario(PolicyKind::Adaptive, 123);
    auto a = run_episode(cfg, &model, cat);
    auto b = run_episode(cfg, &model, cat);
    std::ostringstream sa, sb;
    write_episode(sa, a);
    write_episode(sb, b);
    CHECK(sa.str() == sb.str());

    cfg.seed = 124;
    auto c = run_episode(cfg, &model, cat);
    std::ostringstream sc;
    write_episode(sc, c);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("run_episode: planner failures exercise fallback; total failure aborts") {
    auto cat = default_catalog();
    auto model = tiny_model(407);
    auto cfg = tiny_scenario(PolicyKind::VolMax, 55);
    cfg.planner_failure_rate = 0.5;
    auto result = run_episode(cfg, nullptr, cat);
    if (!result.aborted) {
        bool fallback_used = false;
        for (const auto& a : result.attempts) fallback_used |= a.fallback_rank > 0;
        CHECK(fallback_used);
    }

    cfg.planner_failure_rate = 1.0;
    auto dead = run_episode(cfg, nullptr, cat);
    CHECK(dead.aborted);
    CHECK_FALSE(dead.abort_reason.empty());
    CHECK(dead.attempts.empty());
}

TEST_CASE("episode record round trip") {
    auto cat = default_catalog();
    auto model = tiny_model(408);
    auto cfg = tiny_scenario(PolicyKind::NonAdaptive, 9);
    auto result = run_episode(cfg, &model, cat);
    std::stringstream ss;
    write_episode(ss, result);
    auto loaded = read_episode(ss);
    CHECK(loaded.scenario_id == result.scenario_id);
    CHECK(loaded.policy == result.policy);
    CHECK(loaded.seed == result.seed);
    CHECK(loaded.total_mass == result.total_mass);
    REQUIRE(loaded.attempts.size() == result.attempts.size());
    for (std::size_t i = 0; i < loaded.attempts.size(); ++i) {
        CHECK(loaded.attempts[i].action == result.attempts[i].action);
        CHECK(loaded.attempts[i].mass == result.attempts[i].mass);
        CHECK(loaded.attempts[i].scoopable_fraction == result.attempts[i].scoopable_fraction);
    }
}

TEST_CASE("run_experiment: persists episodes, summary re-aggregates exactly") {
    auto cat = default_catalog();
    auto model = tiny_model(409);
    const std::string dir = "test_results_tmp";
    std::filesystem::remove_all(dir);

    ExperimentConfig cfg;
    cfg.scenarios = {tiny_scenario(PolicyKind::Adaptive, 0)};
    cfg.policies = {PolicyKind::VolMax, PolicyKind::Adaptive};
    cfg.runs = 2;
    cfg.master_seed = 31337;
    auto summary = run_experiment(cfg, &model, cat, dir);
    REQUIRE(summary.cells.size() == 2);
    for (const auto& cell : summary.cells) {
        CHECK(cell.run_totals.size() == 2);
        CHECK(cell.mean_mass == cell.recompute_mean());
    }

    auto rebuilt = summarize_results_dir(dir);
    REQUIRE(rebuilt.cells.size() == 2);
    for (const auto& cell : rebuilt.cells) {
        const auto* orig = summary.find(cell.scenario_id, cell.policy);
        REQUIRE(orig != nullptr);
        CHECK(cell.mean_mass == doctest::Approx(orig->mean_mass).epsilon(1e-14));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment: episode failures are recorded, not fatal") {
    auto cat = default_catalog();
    ExperimentConfig cfg;
    cfg.scenarios = {tiny_scenario(PolicyKind::Adaptive, 0)};
    cfg.policies = {PolicyKind::Adaptive, PolicyKind::VolMax};
    cfg.runs = 1;
    // No model for a model-based policy: the adaptive cell aborts, the sweep
    // still finishes and the vol-max cell runs normally.
    auto summary = run_experiment(cfg, nullptr, cat, "");
    REQUIRE(summary.cells.size() == 2);
    CHECK(summary.find("tiny", PolicyKind::Adaptive)->mean_mass == 0.0);
    CHECK(summary.find("tiny", PolicyKind::VolMax)->mean_mass > 0.0);
}

TEST_CASE("eval table reproduces the reference per-scenario aggregation") {
    // Three scenarios, three policies, one run each, with the reference
    // per-scenario means; the table must show averages 1.9 / 22.0 / 63.9.
    const std::string dir = "test_eval_tmp";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const double volmax[3] = {0.0, 0.0, 5.6};
    const double nonadaptive[3] = {3.5, 18.8, 43.6};
    const double adaptive[3] = {52.2, 64.2, 75.4};
    for (int s = 0; s < 3; ++s) {
        auto mk = [&](PolicyKind p, double total) {
            EpisodeResult r;
            r.scenario_id = "scenario" + std::to_string(s + 1);
            r.policy = p;
            r.seed = 1;
            r.budget = 5;
            r.total_mass = total;
            std::ofstream os(std::filesystem::path(dir) /
                             episode_filename(r.scenario_id, p, 0));
            write_episode(os, r);
        };
        mk(PolicyKind::VolMax, volmax[s]);
        mk(PolicyKind::NonAdaptive, nonadaptive[s]);
        mk(PolicyKind::Adaptive, adaptive[s]);
    }
    auto summary = summarize_results_dir(dir);
    const auto avgs = summary.policy_averages();
    CHECK(fmt_grams(avgs.at(PolicyKind::VolMax)) == "1.9");
    CHECK(fmt_grams(avgs.at(PolicyKind::NonAdaptive)) == "22.0");
    CHECK(fmt_grams(avgs.at(PolicyKind::Adaptive)) == "63.9");

    const std::string table = format_results_table(summary);
    CHECK(table.find("average\t63.9\t22.0\t1.9") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("collect_training_data: record counts and the all-unscoopable case") {
    auto cat = default_catalog();
    CollectConfig cfg;
    cfg.scoops_per_terrain = 7;
    cfg.resets_per_terrain = 2;
    cfg.candidates.patch.size = 12;
    cfg.candidates.patch.extent_cm = 8.0;
    cfg.candidates.grid_pitch = 10.0;
    cfg.perception.pose.width_px = 320;
    cfg.perception.pose.height_px = 240;
    cfg.perception.pose.focal_px = 300.0;
    cfg.seed = 2024;

    TerrainSource sand{"sand_flat", {}};
    sand.spec.base_material = cat.by_name("sand").id;
    TerrainSource comet{"comet_flat", {}};
    comet.spec.base_material = cat.by_name("comet").id;

    auto ds = collect_training_data({sand, comet}, cat, cfg);
    REQUIRE(ds.terrains.size() == 2);
    CHECK(ds.terrains[0].records.size() == 7);
    CHECK(ds.terrains[1].records.size() == 7);
    CHECK(ds.terrains[0].terrain_id == "sand_flat");
    CHECK(ds.terrains[1].material_names == std::vector<std::string>{"comet"});
    for (const auto& r : ds.terrains[1].records) CHECK(r.reward == 0.0);

    CollectConfig none = cfg;
    none.scoops_per_terrain = 0;
    auto empty = collect_training_data({sand}, cat, none);
    CHECK(empty.terrains[0].records.empty());
}

TEST_CASE("scenario and experiment configs parse with defaults") {
    auto cat = default_catalog();
    const auto j = json::parse(R"({
        "id": "s1",
        "terrain": {
            "base_material": "regolith",
            "seed": 3,
            "regions": [{"material": "comet", "rect": [60, 0, 90, 70], "raise_cm": 5.0}],
            "mounds": [{"x": 25, "y": 35, "radius_cm": 8, "height_cm": 4}]
        },
        "policy": "vol_max",
        "budget": 4,
        "beta": 0.5,
        "candidates": {"grid_pitch_cm": 6.0, "patch_size": 16}
    })");
    auto cfg = parse_scenario(j, cat);
    CHECK(cfg.scenario_id == "s1");
    CHECK(cfg.policy == PolicyKind::VolMax);
    CHECK(cfg.budget == 4);
    CHECK(cfg.beta == 0.5);
    CHECK(cfg.terrain.regions.size() == 1);
    CHECK(cfg.terrain.regions[0].raise_cm == 5.0);
    CHECK(cfg.terrain.mounds.size() == 1);
    CHECK(cfg.candidates.grid_pitch == 6.0);
    CHECK(cfg.candidates.patch.size == 16);
    CHECK(cfg.candidates.depth_set == std::vector<double>{0.2, 0.4, 0.6, 0.8});
}
