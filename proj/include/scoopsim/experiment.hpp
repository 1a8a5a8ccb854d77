#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scoopsim/episode.hpp"

namespace scoopsim {

struct CellSummary {
    std::string scenario_id;
    PolicyKind policy = PolicyKind::Adaptive;
    std::vector<double> run_totals;  // per-run total mass, g, in run order
    double mean_mass = 0.0;

    double recompute_mean() const {
        double s = 0.0;
        for (double v : run_totals) s += v;
        return run_totals.empty() ? 0.0 : s / static_cast<double>(run_totals.size());
    }
};

struct ExperimentSummary {
    std::vector<CellSummary> cells;  // sorted by (scenario, policy)

    const CellSummary* find(const std::string& scenario, PolicyKind policy) const {
        for (const auto& c : cells)
            if (c.scenario_id == scenario && c.policy == policy) return &c;
        return nullptr;
    }

    // Per-policy average of scenario means (the results-table bottom row).
    std::map<PolicyKind, double> policy_averages() const {
        std::map<PolicyKind, std::pair<double, int>> acc;
        for (const auto& c : cells) {
            acc[c.policy].first += c.mean_mass;
            acc[c.policy].second += 1;
        }
        std::map<PolicyKind, double> out;
        for (const auto& [p, sv] : acc) out[p] = sv.first / sv.second;
        return out;
    }
};

struct ExperimentConfig {
    std::vector<ScenarioConfig> scenarios;  // policy field ignored here
    std::vector<PolicyKind> policies = {PolicyKind::VolMax, PolicyKind::NonAdaptive,
                                        PolicyKind::Adaptive};
    int runs = 10;
    std::uint64_t master_seed = 0;
};

inline std::string episode_filename(const std::string& scenario_id, PolicyKind policy,
                                    int run) {
    std::ostringstream ss;
    ss << "ep_" << scenario_id << "_" << to_string(policy) << "_" << run << ".tsv";
    return ss.str();
}

// Runs the full grid; every episode gets a derived seed and its own record
// file. Individual episode failures are recorded, not fatal.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const SurrogateModel* model,
                                        const MaterialCatalog& catalog,
                                        const std::string& out_dir = "") {
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    ExperimentSummary summary;
    for (const auto& scenario : cfg.scenarios) {
        for (PolicyKind policy : cfg.policies) {
            CellSummary cell;
            cell.scenario_id = scenario.scenario_id;
            cell.policy = policy;
            for (int run = 0; run < cfg.runs; ++run) {
                ScenarioConfig ep_cfg = scenario;
                ep_cfg.policy = policy;
                ep_cfg.seed = mix64(cfg.master_seed, hash_str(scenario.scenario_id),
                                    mix64(static_cast<std::uint64_t>(policy) + 1, run));
                EpisodeResult result;
                try {
                    result = run_episode(ep_cfg, policy == PolicyKind::VolMax ? nullptr : model,
                                         catalog);
                } catch (const std::exception& e) {
                    // Individual failures become aborted records, not sweep
                    // fatalities.
                    result.scenario_id = ep_cfg.scenario_id;
                    result.policy = policy;
                    result.seed = ep_cfg.seed;
                    result.budget = ep_cfg.budget;
                    result.aborted = true;
                    result.abort_reason = e.what();
                }
                cell.run_totals.push_back(result.total_mass);
                if (!out_dir.empty()) {
                    std::ofstream os(std::filesystem::path(out_dir) /
                                     episode_filename(scenario.scenario_id, policy, run));
                    write_episode(os, result);
                }
            }
            cell.mean_mass = cell.recompute_mean();
            summary.cells.push_back(std::move(cell));
        }
    }
    return summary;
}

// --- Summary persistence and the eval table ---------------------------------

inline void write_summary(std::ostream& os, const ExperimentSummary& summary) {
    os << "scenario\tpolicy\truns\tmean_mass_g\trun_totals_g\n";
    for (const auto& c : summary.cells) {
        os << c.scenario_id << '\t' << to_string(c.policy) << '\t' << c.run_totals.size() << '\t'
           << detail::fmt_full(c.mean_mass) << '\t';
        for (std::size_t i = 0; i < c.run_totals.size(); ++i) {
            if (i) os << ',';
            os << detail::fmt_full(c.run_totals[i]);
        }
        os << '\n';
    }
}

inline ExperimentSummary read_summary(std::istream& is) {
    ExperimentSummary summary;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        CellSummary cell;
        std::string policy, totals;
        std::size_t runs = 0;
        ss >> cell.scenario_id >> policy >> runs >> cell.mean_mass >> totals;
        cell.policy = policy_from_string(policy);
        std::istringstream ts(totals);
        std::string tok;
        while (std::getline(ts, tok, ',')) cell.run_totals.push_back(std::stod(tok));
        summary.cells.push_back(std::move(cell));
    }
    return summary;
}

// Rebuilds a summary from persisted episode files in a results directory.
inline ExperimentSummary summarize_results_dir(const std::string& dir) {
    std::map<std::pair<std::string, int>, CellSummary> cells;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".tsv" && e.path().filename().string().rfind("ep_", 0) == 0)
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream is(f);
        if (!is) throw std::runtime_error("cannot open: " + f.string());
        const EpisodeResult r = read_episode(is);
        auto& cell = cells[{r.scenario_id, static_cast<int>(r.policy)}];
        cell.scenario_id = r.scenario_id;
        cell.policy = r.policy;
        cell.run_totals.push_back(r.total_mass);
    }
    if (cells.empty()) throw std::runtime_error("no episode records found in " + dir);
    ExperimentSummary summary;
    for (auto& [key, cell] : cells) {
        cell.mean_mass = cell.recompute_mean();
        summary.cells.push_back(std::move(cell));
    }
    return summary;
}

inline std::string fmt_grams(double g) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", g);
    return buf;
}

// The results table: one row per scenario, one column per policy, plus the
// per-policy average over scenarios. Grams, rounded to 0.1 for display.
inline std::string format_results_table(const ExperimentSummary& summary) {
    std::vector<std::string> scenarios;
    std::vector<PolicyKind> policies;
    for (const auto& c : summary.cells) {
        if (std::find(scenarios.begin(), scenarios.end(), c.scenario_id) == scenarios.end())
            scenarios.push_back(c.scenario_id);
        if (std::find(policies.begin(), policies.end(), c.policy) == policies.end())
            policies.push_back(c.policy);
    }
    std::sort(scenarios.begin(), scenarios.end());
    std::sort(policies.begin(), policies.end());

    std::ostringstream os;
    os << "scenario";
    for (PolicyKind p : policies) os << '\t' << to_string(p);
    os << '\n';
    for (const auto& s : scenarios) {
        os << s;
        for (PolicyKind p : policies) {
            const CellSummary* c = summary.find(s, p);
            os << '\t' << (c ? fmt_grams(c->mean_mass) : "-");
        }
        os << '\n';
    }
    os << "average";
    const auto avgs = summary.policy_averages();
    for (PolicyKind p : policies) os << '\t' << fmt_grams(avgs.at(p));
    os << '\n';
    return os.str();
}

}  // namespace scoopsim
