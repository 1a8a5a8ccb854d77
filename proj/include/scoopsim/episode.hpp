#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "scoopsim/candidates.hpp"
#include "scoopsim/perception.hpp"
#include "scoopsim/policy.hpp"
#include "scoopsim/surrogate.hpp"

namespace scoopsim {

// One cell of the experiment grid: a terrain, a policy, and a budget of
// attempts under one seed.
struct ScenarioConfig {
    std::string scenario_id = "scenario";
    TerrainSpec terrain;
    PolicyKind policy = PolicyKind::Adaptive;
    int budget = 5;  // k attempts
    std::uint64_t seed = 0;
    double planner_failure_rate = 0.0;
    double beta = 1.0;
    PerceptionConfig perception;
    CandidateConfig candidates;
    WorkspaceConfig workspace;
    ScoopGeometry scoop;
};

struct AttemptRecord {
    int attempt = 0;  // 1-based
    ScoopAction action;
    std::size_t candidate_count = 0;
    int fallback_rank = 0;  // 0 = top-ranked action planned successfully
    double volume = 0.0;    // cm^3
    double mass = 0.0;      // g
    bool jammed = false;
    double scoopable_fraction = 0.0;  // swept-area fraction on scoopable material
};

struct EpisodeResult {
    std::string scenario_id;
    PolicyKind policy = PolicyKind::Adaptive;
    std::uint64_t seed = 0;
    int budget = 0;
    std::vector<AttemptRecord> attempts;
    SupportSet support;  // final online history, one entry per attempt
    bool aborted = false;
    std::string abort_reason;
    double total_volume = 0.0;
    double total_mass = 0.0;
    double wall_clock_sec = 0.0;  // reported, never persisted
};

// Debug observer: called once per attempt with the processed observation,
// the candidate set, and the full ranking before execution.
using AttemptObserver = std::function<void(int attempt, const RasterObservation&,
                                           const CandidateSet&, const Ranking&)>;

// The deployment loop: observe the mutated terrain afresh, generate the
// candidate set, rank with the policy (support of size n-1), walk the
// ranking past planner failures, execute, measure, and append to the online
// support set.
inline EpisodeResult run_episode(const ScenarioConfig& cfg, const SurrogateModel* model,
                                 const MaterialCatalog& catalog,
                                 const AttemptObserver& observer = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    EpisodeResult result;
    result.scenario_id = cfg.scenario_id;
    result.policy = cfg.policy;
    result.seed = cfg.seed;
    result.budget = cfg.budget;
    if (cfg.budget < 1) throw std::invalid_argument("run_episode: budget must be >= 1");
    if (cfg.policy != PolicyKind::VolMax && model == nullptr)
        throw std::invalid_argument("run_episode: policy requires a model checkpoint");

    // Reset variation: each episode re-realizes the terrain's minor features.
    TerrainSpec spec = cfg.terrain;
    spec.seed = mix64(spec.seed, cfg.seed, 0xe515ULL);
    TerrainState state = synthesize_terrain(spec, catalog);

    WorkspaceConfig ws = cfg.workspace;
    ws.planner_failure_rate = cfg.planner_failure_rate;
    ws.planner_seed = mix64(cfg.seed, 0x91a2ULL);

    SupportSet support(static_cast<std::size_t>(cfg.budget));
    for (int n = 1; n <= cfg.budget; ++n) {
        const RasterObservation raster =
            perceive(state, cfg.perception, catalog, mix64(cfg.seed, 0x0b5ULL, n));

        CandidateSet cands;
        try {
            cands = generate_candidates(raster, state, ws, cfg.scoop, cfg.candidates);
        } catch (const std::exception& e) {
            result.aborted = true;
            result.abort_reason = e.what();
            break;
        }

        PolicyContext ctx;
        ctx.model = model;
        ctx.raster = &raster;
        ctx.geom = &cfg.scoop;
        ctx.beta = cfg.beta;
        const Ranking ranking =
            select_action(cfg.policy, ctx, cands, support, mix64(cfg.seed, 0x7b2ULL, n));
        if (observer) observer(n, raster, cands, ranking);

        FallbackResult fb;
        try {
            fb = fallback_select(ranking, [&](std::size_t i) {
                return check_feasibility(state, cands.entries[i].action, ws, cfg.scoop);
            });
        } catch (const std::exception& e) {
            result.aborted = true;
            result.abort_reason = e.what();
            break;
        }

        const ScoopAction action = cands.entries[fb.candidate].action;
        auto [outcome, next] = execute_scoop(state, action, catalog, cfg.scoop);
        state = std::move(next);
        support.append({cands.patch_for(fb.candidate), action, outcome.volume});

        AttemptRecord rec;
        rec.attempt = n;
        rec.action = action;
        rec.candidate_count = cands.size();
        rec.fallback_rank = fb.rank_used;
        rec.volume = outcome.volume;
        rec.mass = outcome.mass;
        rec.jammed = outcome.jammed;
        rec.scoopable_fraction = outcome.scoopable_fraction;
        result.attempts.push_back(rec);
        result.total_volume += outcome.volume;
        result.total_mass += outcome.mass;
    }
    result.support = std::move(support);
    result.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

// --- Episode record persistence (TSV, deterministic formatting) ------------

namespace detail {

inline std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_episode(std::ostream& os, const EpisodeResult& r) {
    os << "# scoopsim episode v1\n";
    os << "# scenario\t" << r.scenario_id << "\tpolicy\t" << to_string(r.policy) << "\tseed\t"
       << r.seed << "\tbudget\t" << r.budget << "\n";
    os << "# aborted\t" << (r.aborted ? 1 : 0) << "\t" << r.abort_reason << "\n";
    os << "attempt\tx\ty\ttheta\tdepth\tstiffness\tcandidates\tfallback_rank\tvolume_cm3\t"
          "mass_g\tjammed\tscoopable_fraction\n";
    for (const auto& a : r.attempts) {
        os << a.attempt << '\t' << detail::fmt_full(a.action.x) << '\t'
           << detail::fmt_full(a.action.y) << '\t' << detail::fmt_full(a.action.theta) << '\t'
           << detail::fmt_full(a.action.depth) << '\t'
           << (a.action.stiffness == Stiffness::High ? "high" : "low") << '\t'
           << a.candidate_count << '\t' << a.fallback_rank << '\t'
           << detail::fmt_full(a.volume) << '\t' << detail::fmt_full(a.mass) << '\t'
           << (a.jammed ? 1 : 0) << '\t' << detail::fmt_full(a.scoopable_fraction) << '\n';
    }
    os << "total\t" << detail::fmt_full(r.total_volume) << '\t' << detail::fmt_full(r.total_mass)
       << '\n';
}

inline EpisodeResult read_episode(std::istream& is) {
    EpisodeResult r;
    std::string line;
    if (!std::getline(is, line) || line != "# scoopsim episode v1")
        throw std::runtime_error("episode file: bad header");
    if (!std::getline(is, line)) throw std::runtime_error("episode file: truncated");
    {
        std::istringstream ss(line);
        std::string hash, k1, k2, k3, k4;
        ss >> hash >> k1 >> r.scenario_id >> k2;
        std::string policy;
        ss >> policy >> k3 >> r.seed >> k4 >> r.budget;
        r.policy = policy_from_string(policy);
    }
    if (!std::getline(is, line)) throw std::runtime_error("episode file: truncated");
    {
        std::istringstream ss(line);
        std::string hash, key;
        int aborted = 0;
        ss >> hash >> key >> aborted;
        r.aborted = aborted != 0;
        std::getline(ss, r.abort_reason);
        if (!r.abort_reason.empty() && r.abort_reason.front() == '\t')
            r.abort_reason.erase(0, 1);
    }
    std::getline(is, line);  // column header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string first;
        ss >> first;
        if (first == "total") {
            ss >> r.total_volume >> r.total_mass;
            break;
        }
        AttemptRecord a;
        a.attempt = std::stoi(first);
        std::string stiffness;
        int jammed = 0;
        ss >> a.action.x >> a.action.y >> a.action.theta >> a.action.depth >> stiffness >>
            a.candidate_count >> a.fallback_rank >> a.volume >> a.mass >> jammed >>
            a.scoopable_fraction;
        a.action.stiffness = stiffness == "high" ? Stiffness::High : Stiffness::Low;
        a.jammed = jammed != 0;
        r.attempts.push_back(a);
    }
    return r;
}

}  // namespace scoopsim
