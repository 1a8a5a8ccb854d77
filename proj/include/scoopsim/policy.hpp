#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scoopsim/candidates.hpp"
#include "scoopsim/surrogate.hpp"

namespace scoopsim {

enum class PolicyKind { Adaptive, NonAdaptive, VolMax };

inline std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Adaptive: return "adaptive";
        case PolicyKind::NonAdaptive: return "non_adaptive";
        case PolicyKind::VolMax: return "vol_max";
    }
    return "?";
}

inline PolicyKind policy_from_string(const std::string& s) {
    if (s == "adaptive") return PolicyKind::Adaptive;
    if (s == "non_adaptive") return PolicyKind::NonAdaptive;
    if (s == "vol_max") return PolicyKind::VolMax;
    throw std::invalid_argument("unknown policy kind: " + s);
}

struct CandidateScore {
    double mean = 0.0;   // cm^3 (posterior or prior mean); swept volume for VolMax
    double sigma = 0.0;  // cm^3 posterior std; 0 for VolMax/NonAdaptive
    double score = 0.0;
};

// Upper-confidence acquisition over the surrogate posterior conditioned on
// the online support set: score = mu + beta * sigma.
inline std::vector<CandidateScore> score_adaptive(const SurrogateModel& model,
                                                  const CandidateSet& candidates,
                                                  const SupportSet& support, double beta) {
    if (beta < 0.0) throw std::invalid_argument("score_adaptive: beta must be >= 0");
    ConditionedSurrogate cond(model, support);
    // Encode each stored patch once; candidates sharing pixels differ only in
    // action parameters.
    std::vector<CandidateScore> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& entry = candidates.entries[i];
        const VectorXd z = model.encoder.forward(
            make_encoder_input(candidates.patches[entry.patch_index], entry.action.depth,
                               entry.action.stiffness));
        const Prediction p = cond.predict_features(z);
        const double sigma = std::sqrt(std::max(p.variance, 0.0));
        out[i] = {p.mean, sigma, p.mean + beta * sigma};
    }
    return out;
}

// The deep-mean-only baseline: ranking is a function of the observation
// alone, whatever the support holds.
inline std::vector<CandidateScore> score_nonadaptive(const SurrogateModel& model,
                                                     const CandidateSet& candidates) {
    std::vector<CandidateScore> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& entry = candidates.entries[i];
        const VectorXd z = model.encoder.forward(
            make_encoder_input(candidates.patches[entry.patch_index], entry.action.depth,
                               entry.action.stiffness));
        const double m = model.affine.destandardize(model.mean_std_units(z));
        out[i] = {m, 0.0, m};
    }
    return out;
}

// Swept-volume baseline: intersection of the scoop prism (cut plane at the
// observed entry height minus depth, mouth_height tall) with the observed
// terrain columns. Material-blind; uses the depth raster only.
inline double swept_volume_score(const RasterObservation& raster, const ScoopAction& action,
                                 const ScoopGeometry& geom) {
    const OrientedRect rect = geom.footprint(action);
    const double cell = raster.cell_size;
    const double cell_area = cell * cell;
    const double entry = raster.sample_depth(action.x, action.y);
    const double cut = std::max(entry - action.depth, 0.0);

    const auto [xmin, ymin, xmax, ymax] = rect.bbox();
    const long ix0 = std::max<long>(0, static_cast<long>(std::floor(xmin / cell)));
    const long iy0 = std::max<long>(0, static_cast<long>(std::floor(ymin / cell)));
    const long ix1 =
        std::min<long>(static_cast<long>(raster.nx()) - 1, static_cast<long>(std::floor(xmax / cell)));
    const long iy1 =
        std::min<long>(static_cast<long>(raster.ny()) - 1, static_cast<long>(std::floor(ymax / cell)));

    double vol = 0.0;
    for (long ix = ix0; ix <= ix1; ++ix) {
        for (long iy = iy0; iy <= iy1; ++iy) {
            const Vec2 c{(ix + 0.5) * cell, (iy + 0.5) * cell};
            const double w = cell_coverage(rect, c, cell);
            if (w <= 0.0) continue;
            const double thickness =
                std::clamp(static_cast<double>(raster.depth(ix, iy)) - cut, 0.0,
                           geom.mouth_height);
            vol += thickness * w * cell_area;
        }
    }
    return vol;
}

inline std::vector<CandidateScore> score_volmax(const RasterObservation& raster,
                                                const CandidateSet& candidates,
                                                const ScoopGeometry& geom) {
    std::vector<CandidateScore> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double v = swept_volume_score(raster, candidates.entries[i].action, geom);
        out[i] = {v, 0.0, v};
    }
    return out;
}

struct Ranking {
    std::vector<std::size_t> order;  // candidate indices, best first
    std::vector<CandidateScore> scores;
};

// Full descending ranking with seeded uniform tie-breaks.
inline Ranking rank_candidates(std::vector<CandidateScore> scores, std::uint64_t tie_seed) {
    if (scores.empty()) throw std::invalid_argument("rank_candidates: no candidates");
    std::vector<std::size_t> tie(scores.size());
    std::iota(tie.begin(), tie.end(), 0);
    auto rng = make_rng(mix64(tie_seed, 0x71e5ULL));
    std::shuffle(tie.begin(), tie.end(), rng);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
        return tie[a] < tie[b];
    });
    return {std::move(order), std::move(scores)};
}

struct PolicyContext {
    const SurrogateModel* model = nullptr;  // Adaptive / NonAdaptive
    const RasterObservation* raster = nullptr;  // VolMax
    const ScoopGeometry* geom = nullptr;
    double beta = 1.0;
};

inline Ranking select_action(PolicyKind kind, const PolicyContext& ctx,
                             const CandidateSet& candidates, const SupportSet& support,
                             std::uint64_t tie_seed) {
    switch (kind) {
        case PolicyKind::Adaptive:
            if (!ctx.model) throw std::invalid_argument("select_action: model required");
            return rank_candidates(score_adaptive(*ctx.model, candidates, support, ctx.beta),
                                   tie_seed);
        case PolicyKind::NonAdaptive:
            if (!ctx.model) throw std::invalid_argument("select_action: model required");
            return rank_candidates(score_nonadaptive(*ctx.model, candidates), tie_seed);
        case PolicyKind::VolMax:
            if (!ctx.raster || !ctx.geom)
                throw std::invalid_argument("select_action: raster and geometry required");
            return rank_candidates(score_volmax(*ctx.raster, candidates, *ctx.geom), tie_seed);
    }
    throw std::logic_error("select_action: unreachable");
}

// Walks the ranking until the feasibility oracle (planner included) accepts;
// returns the accepted candidate index and how deep the fallback went.
struct FallbackResult {
    std::size_t candidate = 0;
    int rank_used = 0;  // 0 = top action
};

inline FallbackResult fallback_select(const Ranking& ranking,
                                      const std::function<bool(std::size_t)>& feasible) {
    if (ranking.order.empty()) throw std::invalid_argument("fallback_select: empty ranking");
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
        if (feasible(ranking.order[r])) return {ranking.order[r], static_cast<int>(r)};
    }
    throw std::runtime_error("fallback_select: no feasible action in ranking");
}

}  // namespace scoopsim
