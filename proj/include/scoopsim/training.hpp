#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scoopsim/dataset.hpp"
#include "scoopsim/folds.hpp"
#include "scoopsim/gp.hpp"
#include "scoopsim/surrogate.hpp"

namespace scoopsim {

struct MeanTrainConfig {
    int epochs = 300;
    int batch_size = 32;
    double lr = 0.02;
    double momentum = 0.9;
    double lr_decay = 0.5;  // applied at 60% and 85% of the schedule
    int eval_every = 5;     // full-data MSE cadence for checkpoint selection
    std::uint64_t seed = 0;
};

struct KernelTrainConfig {
    int steps = 2000;
    int batch_episodes = 8;
    int max_support = 4;  // online support never exceeds k - 1
    double lr = 0.05;
    double momentum = 0.9;
    bool episodic = true;  // false: marginal NLML objective
    int eval_every = 50;
    int eval_episodes = 256;
    std::uint64_t seed = 0;
};

// MSE over standardized rewards with gradients for both the encoder and the
// mean head. The unit under the finite-difference checks.
inline double mean_loss_and_grad(const FeatureEncoder& encoder, const DeepMean& mean,
                                 const std::vector<EncoderInput>& inputs,
                                 const std::vector<double>& targets_std,
                                 VectorXd* encoder_grad, VectorXd* mean_grad) {
    const std::size_t n = inputs.size();
    if (n == 0) throw std::invalid_argument("mean loss: empty batch");
    if (encoder_grad) encoder_grad->setZero(encoder.params.size());
    if (mean_grad) mean_grad->setZero(mean.params.size());
    double loss = 0.0;
    EncoderTrace etrace;
    DeepMean::Trace mtrace;
    for (std::size_t i = 0; i < n; ++i) {
        const VectorXd z = encoder.forward(inputs[i], &etrace);
        const double y = mean.forward(z, &mtrace);
        const double err = y - targets_std[i];
        loss += err * err / static_cast<double>(n);
        if (encoder_grad || mean_grad) {
            const double dy = 2.0 * err / static_cast<double>(n);
            const auto mg = mean.backward(mtrace, dy);
            if (mean_grad) *mean_grad += mg.params;
            if (encoder_grad) encoder.backward_accumulate(etrace, mg.input, *encoder_grad);
        }
    }
    if (!std::isfinite(loss)) throw std::runtime_error("mean loss: diverged (non-finite)");
    return loss;
}

struct MeanTrainResult {
    FeatureEncoder encoder;
    DeepMean mean;
    std::vector<std::pair<int, double>> loss_log;  // (epoch, full-data MSE)
};

// Gradient descent on volume-prediction MSE with a fixed schedule; returns
// the best checkpoint seen on the full training set.
inline MeanTrainResult train_mean(const std::vector<const TrainingRecord*>& records,
                                  const EncoderArch& arch, int mean_hidden,
                                  const RewardAffine& affine, const MeanTrainConfig& cfg) {
    if (records.empty()) throw std::invalid_argument("train_mean: no records");
    MeanTrainResult result;
    result.encoder = FeatureEncoder(arch);
    result.encoder.init_random(mix64(cfg.seed, 0x111));
    result.mean = DeepMean(arch.features, mean_hidden);
    result.mean.init_random(mix64(cfg.seed, 0x222));

    std::vector<EncoderInput> inputs;
    std::vector<double> targets;
    inputs.reserve(records.size());
    for (const auto* r : records) {
        inputs.push_back(make_encoder_input(r->patch));
        targets.push_back(affine.standardize(r->reward));
    }

    auto full_mse = [&] {
        return mean_loss_and_grad(result.encoder, result.mean, inputs, targets, nullptr, nullptr);
    };

    double best_mse = full_mse();
    VectorXd best_enc = result.encoder.params;
    VectorXd best_mean = result.mean.params;
    result.loss_log.emplace_back(0, best_mse);

    nn::SgdMomentum opt_enc{cfg.lr, cfg.momentum};
    nn::SgdMomentum opt_mean{cfg.lr, cfg.momentum};
    auto rng = make_rng(mix64(cfg.seed, 0x333));
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double decay =
            (epoch > static_cast<int>(0.85 * cfg.epochs)) ? cfg.lr_decay * cfg.lr_decay
            : (epoch > static_cast<int>(0.6 * cfg.epochs)) ? cfg.lr_decay
                                                           : 1.0;
        opt_enc.lr = cfg.lr * decay;
        opt_mean.lr = cfg.lr * decay;

        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<EncoderInput> batch_in;
            std::vector<double> batch_t;
            for (std::size_t i = start; i < stop; ++i) {
                batch_in.push_back(inputs[order[i]]);
                batch_t.push_back(targets[order[i]]);
            }
            VectorXd ge, gm;
            mean_loss_and_grad(result.encoder, result.mean, batch_in, batch_t, &ge, &gm);
            opt_enc.step(result.encoder.params, ge);
            opt_mean.step(result.mean.params, gm);
        }

        if (epoch % std::max(cfg.eval_every, 1) == 0 || epoch == cfg.epochs) {
            const double mse = full_mse();
            result.loss_log.emplace_back(epoch, mse);
            if (mse < best_mse) {
                best_mse = mse;
                best_enc = result.encoder.params;
                best_mean = result.mean.params;
            }
        }
    }
    result.encoder.params = best_enc;
    result.mean.params = best_mean;
    return result;
}

// Residuals of a trained mean on one terrain's records, with the encoded
// features the kernel consumes. Standardized units throughout.
struct ResidualGroup {
    std::size_t terrain_index = 0;
    MatrixXd features;  // rows per record
    VectorXd residuals;
};

inline ResidualGroup compute_residuals(const FeatureEncoder& encoder, const DeepMean& mean,
                                       const RewardAffine& affine, const TerrainDataset& terrain,
                                       std::size_t terrain_index) {
    ResidualGroup g;
    g.terrain_index = terrain_index;
    const auto n = static_cast<Eigen::Index>(terrain.records.size());
    g.features.resize(n, encoder.arch.features);
    g.residuals.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = terrain.records[static_cast<std::size_t>(i)];
        const VectorXd z = encoder.forward(make_encoder_input(rec.patch));
        g.features.row(i) = z.transpose();
        g.residuals(i) = affine.standardize(rec.reward) - mean.forward(z);
    }
    return g;
}

namespace detail {

struct Episode {
    std::size_t group;
    std::vector<Eigen::Index> support;
    Eigen::Index query;
};

inline Episode sample_episode(const std::vector<ResidualGroup>& groups, int max_support,
                              std::mt19937_64& rng) {
    Episode ep;
    ep.group = rng() % groups.size();
    const auto n = groups[ep.group].features.rows();
    const int cap = std::min<int>(max_support, static_cast<int>(n) - 1);
    const int s = cap > 0 ? static_cast<int>(rng() % (cap + 1)) : 0;
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i <= s; ++i)
        std::swap(idx[i], idx[i + static_cast<Eigen::Index>(rng() % (n - i))]);
    ep.support.assign(idx.begin(), idx.begin() + s);
    ep.query = idx[s];
    return ep;
}

inline EpisodicNll episode_loss(const ResidualKernel& kernel,
                                const std::vector<ResidualGroup>& groups, const Episode& ep,
                                bool with_grad) {
    const auto& g = groups[ep.group];
    MatrixXd Zs(static_cast<Eigen::Index>(ep.support.size()), g.features.cols());
    VectorXd rho(static_cast<Eigen::Index>(ep.support.size()));
    for (std::size_t i = 0; i < ep.support.size(); ++i) {
        Zs.row(static_cast<Eigen::Index>(i)) = g.features.row(ep.support[i]);
        rho(static_cast<Eigen::Index>(i)) = g.residuals(ep.support[i]);
    }
    return episodic_predictive_nll(kernel, Zs, rho, g.features.row(ep.query).transpose(),
                                   g.residuals(ep.query), with_grad);
}

inline void clamp_kernel(VectorXd& theta, int dim) {
    theta(0) = std::clamp(theta(0), std::log(1e-6), std::log(1e4));
    theta(1) = std::clamp(theta(1), std::log(1e-8), std::log(1e2));
    for (int d = 0; d < dim; ++d)
        theta(2 + d) = std::clamp(theta(2 + d), std::log(1e-2), std::log(1e2));
}

}  // namespace detail

struct KernelTrainResult {
    ResidualKernel kernel;
    std::vector<std::pair<int, double>> loss_log;  // (step, eval loss)
};

// One shared hyperparameter set descends the loss aggregated over all fold
// residual groups. The default objective mirrors deployment: predictive NLL
// of a held-out query residual given a sampled support of size 0..max_support
// from the same terrain.
inline KernelTrainResult train_kernel(const std::vector<ResidualGroup>& groups,
                                      const KernelTrainConfig& cfg) {
    if (groups.empty()) throw std::invalid_argument("train_kernel: no residual groups");
    for (const auto& g : groups)
        if (g.features.rows() < 1) throw std::invalid_argument("train_kernel: empty group");
    const int dim = static_cast<int>(groups.front().features.cols());

    double var = 0.0;
    std::size_t count = 0;
    for (const auto& g : groups) {
        var += g.residuals.squaredNorm();
        count += static_cast<std::size_t>(g.residuals.size());
    }
    var = std::max(var / static_cast<double>(count), 1e-4);

    KernelTrainResult result;
    result.kernel = ResidualKernel::make(dim);
    result.kernel.log_signal_var = std::log(0.75 * var);
    result.kernel.log_noise_var = std::log(0.25 * var);

    // Fixed evaluation episodes: the monitored aggregated loss.
    auto eval_rng = make_rng(mix64(cfg.seed, 0xe7a1ULL));
    std::vector<detail::Episode> eval_set;
    for (int i = 0; i < cfg.eval_episodes; ++i)
        eval_set.push_back(detail::sample_episode(groups, cfg.max_support, eval_rng));
    auto eval_loss = [&](const ResidualKernel& k) {
        double total = 0.0;
        for (const auto& ep : eval_set) {
            if (cfg.episodic) {
                total += detail::episode_loss(k, groups, ep, false).value;
            } else {
                const auto& g = groups[ep.group];
                total += marginal_nlml(k, g.features, g.residuals, false).value /
                         static_cast<double>(g.features.rows());
            }
        }
        return total / eval_set.size();
    };

    VectorXd theta = result.kernel.pack();
    double best_loss = eval_loss(result.kernel);
    VectorXd best_theta = theta;
    result.loss_log.emplace_back(0, best_loss);

    nn::SgdMomentum opt{cfg.lr, cfg.momentum};
    auto rng = make_rng(mix64(cfg.seed, 0x5e11ULL));
    ResidualKernel k = result.kernel;
    for (int step = 1; step <= cfg.steps; ++step) {
        VectorXd grad = VectorXd::Zero(theta.size());
        for (int b = 0; b < cfg.batch_episodes; ++b) {
            if (cfg.episodic) {
                const auto ep = detail::sample_episode(groups, cfg.max_support, rng);
                grad += detail::episode_loss(k, groups, ep, true).grad;
            } else {
                const auto& g = groups[rng() % groups.size()];
                grad += marginal_nlml(k, g.features, g.residuals, true).grad /
                        static_cast<double>(g.features.rows());
            }
        }
        grad /= static_cast<double>(cfg.batch_episodes);
        if (!grad.allFinite()) throw std::runtime_error("train_kernel: diverged (non-finite)");
        opt.step(theta, grad);
        detail::clamp_kernel(theta, dim);
        k.unpack(theta);

        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const double loss = eval_loss(k);
            result.loss_log.emplace_back(step, loss);
            if (loss < best_loss) {
                best_loss = loss;
                best_theta = theta;
            }
        }
    }
    result.kernel.unpack(best_theta);
    return result;
}

// --- Pipeline assembly -----------------------------------------------------

struct TrainPipelineConfig {
    EncoderArch arch;
    int mean_hidden = 16;
    int fold_count = 4;
    bool joint = false;  // ablation: residuals from the all-data mean, no folds
    MeanTrainConfig mean;
    KernelTrainConfig kernel;
    std::uint64_t seed = 0;
};

struct TrainArtifacts {
    SurrogateModel model;
    FoldPlan plan;  // empty when joint
    std::vector<std::pair<int, double>> mean_loss_log;
    std::vector<std::pair<int, double>> kernel_loss_log;
};

inline RewardAffine corpus_affine(const TrainingDataset& dataset) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& t : dataset.terrains)
        for (const auto& r : t.records) {
            sum += r.reward;
            sq += r.reward * r.reward;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("corpus_affine: empty dataset");
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(sq / static_cast<double>(n) - mean * mean, 0.0);
    return {mean, std::max(std::sqrt(var), 1e-6)};
}

inline std::vector<const TrainingRecord*> records_of(const TrainingDataset& dataset,
                                                     const std::vector<std::size_t>& terrains) {
    std::vector<const TrainingRecord*> out;
    for (std::size_t t : terrains)
        for (const auto& r : dataset.terrains[t].records) out.push_back(&r);
    return out;
}

inline std::vector<std::size_t> all_terrain_indices(const TrainingDataset& dataset) {
    std::vector<std::size_t> idx(dataset.terrains.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// Similarity keys for fold grouping: the texture scale of each terrain's
// primary material.
inline std::vector<double> fold_similarity_keys(const TrainingDataset& dataset,
                                                const MaterialCatalog& catalog) {
    std::vector<double> keys;
    for (const auto& t : dataset.terrains) {
        if (t.material_names.empty()) throw std::invalid_argument("terrain without materials");
        keys.push_back(catalog.by_name(t.material_names.front()).roughness_amplitude);
    }
    return keys;
}

// The full training procedure: fold split, per-fold deep means, residuals on
// each fold's held-out terrains, one common kernel over the aggregated
// episodic losses, and a final mean retrained on everything. The joint
// variant skips the split and trains the kernel on the final mean's own
// (in-distribution) residuals.
inline TrainArtifacts run_training(const TrainingDataset& dataset,
                                   const MaterialCatalog& catalog,
                                   const TrainPipelineConfig& cfg) {
    if (dataset.terrains.empty()) throw std::invalid_argument("run_training: empty dataset");
    const RewardAffine affine = corpus_affine(dataset);

    TrainArtifacts art;
    MeanTrainConfig final_cfg = cfg.mean;
    final_cfg.seed = mix64(cfg.seed, 0xf17a1ULL);
    auto final_mean =
        train_mean(records_of(dataset, all_terrain_indices(dataset)), cfg.arch, cfg.mean_hidden,
                   affine, final_cfg);
    art.mean_loss_log = final_mean.loss_log;

    std::vector<ResidualGroup> groups;
    if (cfg.joint) {
        for (std::size_t t = 0; t < dataset.terrains.size(); ++t)
            groups.push_back(compute_residuals(final_mean.encoder, final_mean.mean, affine,
                                               dataset.terrains[t], t));
    } else {
        art.plan = split_folds(fold_similarity_keys(dataset, catalog), cfg.fold_count,
                               mix64(cfg.seed, 0x5911ULL));
        for (std::size_t f = 0; f < art.plan.folds.size(); ++f) {
            MeanTrainConfig fold_cfg = cfg.mean;
            fold_cfg.seed = mix64(cfg.seed, 0xf01d0ULL + f);
            auto fold_mean = train_mean(records_of(dataset, art.plan.mean_set(f)), cfg.arch,
                                        cfg.mean_hidden, affine, fold_cfg);
            for (std::size_t t : art.plan.kernel_set(f))
                groups.push_back(compute_residuals(fold_mean.encoder, fold_mean.mean, affine,
                                                   dataset.terrains[t], t));
        }
    }

    KernelTrainConfig kernel_cfg = cfg.kernel;
    kernel_cfg.seed = mix64(cfg.seed, 0x6e26e1ULL);
    auto kernel = train_kernel(groups, kernel_cfg);
    art.kernel_loss_log = kernel.loss_log;

    art.model.encoder = std::move(final_mean.encoder);
    art.model.mean = std::move(final_mean.mean);
    art.model.kernel = kernel.kernel;
    art.model.affine = affine;
    art.model.validate();
    return art;
}

}  // namespace scoopsim
