#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "scoopsim/rng.hpp"

namespace scoopsim {

// Fold plan over training terrains: fold f's terrains form the kernel
// training set; every other terrain forms its mean training set.
struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;
    std::size_t terrain_count = 0;

    std::vector<std::size_t> kernel_set(std::size_t f) const { return folds[f]; }
    std::vector<std::size_t> mean_set(std::size_t f) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < terrain_count; ++i) {
            bool in_fold = false;
            for (std::size_t t : folds[f]) in_fold |= (t == i);
            if (!in_fold) out.push_back(i);
        }
        return out;
    }

    void validate() const {
        std::vector<bool> seen(terrain_count, false);
        for (const auto& fold : folds) {
            if (fold.empty()) throw std::invalid_argument("fold plan: empty fold");
            for (std::size_t t : fold) {
                if (t >= terrain_count || seen[t])
                    throw std::invalid_argument("fold plan: not a partition");
                seen[t] = true;
            }
        }
        for (bool s : seen)
            if (!s) throw std::invalid_argument("fold plan: not covering");
    }
};

// Deliberate deployment gaps: terrains are ordered by a material-similarity
// key (roughness scale works well for single-material terrains) and chunked,
// so each fold groups look-alike materials that its mean set never saw. The
// seed shuffles fold order.
inline FoldPlan split_folds(const std::vector<double>& similarity_keys, int fold_count,
                            std::uint64_t seed) {
    const std::size_t n = similarity_keys.size();
    if (fold_count < 2)
        throw std::invalid_argument("split_folds: need >= 2 folds so mean sets are non-empty");
    if (static_cast<std::size_t>(fold_count) > n)
        throw std::invalid_argument("split_folds: more folds than terrains");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return similarity_keys[a] < similarity_keys[b];
    });

    FoldPlan plan;
    plan.terrain_count = n;
    plan.folds.resize(fold_count);
    std::size_t next = 0;
    for (int f = 0; f < fold_count; ++f) {
        const std::size_t size = n / fold_count + (static_cast<std::size_t>(f) < n % fold_count);
        for (std::size_t i = 0; i < size; ++i) plan.folds[f].push_back(order[next++]);
    }
    auto rng = make_rng(mix64(seed, 0xf01d5ULL));
    std::shuffle(plan.folds.begin(), plan.folds.end(), rng);
    plan.validate();
    return plan;
}

}  // namespace scoopsim
