#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scoopsim/deep_mean.hpp"
#include "scoopsim/encoder.hpp"
#include "scoopsim/gp.hpp"
#include "scoopsim/io.hpp"
#include "scoopsim/kernel.hpp"
#include "scoopsim/patch.hpp"

namespace scoopsim {

// Affine map between raw rewards (cm^3) and the standardized units the
// network and kernel operate in.
struct RewardAffine {
    double mean = 0.0;
    double std = 1.0;

    double standardize(double r) const { return (r - mean) / std; }
    double destandardize(double y) const { return y * std + mean; }
};

struct SupportEntry {
    Patch patch;
    ScoopAction action;
    double reward = 0.0;  // cm^3
};

// Online history H: append-only within an episode, bounded by the attempt
// budget.
class SupportSet {
public:
    explicit SupportSet(std::size_t budget = 5) : budget_(budget) {}

    void append(SupportEntry entry) {
        if (entries_.size() >= budget_)
            throw std::runtime_error("support set: budget exhausted");
        entries_.push_back(std::move(entry));
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t budget() const { return budget_; }
    const SupportEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<SupportEntry>& entries() const { return entries_; }

private:
    std::size_t budget_;
    std::vector<SupportEntry> entries_;
};

struct Prediction {
    double mean = 0.0;      // cm^3
    double variance = 0.0;  // cm^6
};

// Deep mean + residual GP over encoded features. The deployed model is
// immutable; prediction is pure.
struct SurrogateModel {
    FeatureEncoder encoder;
    DeepMean mean;
    ResidualKernel kernel;
    RewardAffine affine;

    void validate() const {
        if (mean.in_dim != encoder.arch.features || kernel.dim() != encoder.arch.features)
            throw std::invalid_argument("surrogate: component dimensions incompatible");
        if (affine.std <= 0.0) throw std::invalid_argument("surrogate: reward std must be > 0");
    }

    VectorXd encode(const Patch& patch) const {
        const VectorXd f = encoder.forward(make_encoder_input(patch));
        if (!f.allFinite()) throw std::runtime_error("surrogate: non-finite features");
        return f;
    }

    // Standardized deep-mean prediction at encoded features.
    double mean_std_units(const VectorXd& z) const { return mean.forward(z); }
};

inline SurrogateModel make_surrogate(const EncoderArch& arch, int mean_hidden,
                                     std::uint64_t seed) {
    SurrogateModel m;
    m.encoder = FeatureEncoder(arch);
    m.encoder.init_random(mix64(seed, 1));
    m.mean = DeepMean(arch.features, mean_hidden);
    m.mean.init_random(mix64(seed, 2));
    m.kernel = ResidualKernel::make(arch.features);
    m.validate();
    return m;
}

// Support conditioning shared across a batch of candidate queries: features
// and residuals are encoded once, the Gram factorization once.
class ConditionedSurrogate {
public:
    ConditionedSurrogate(const SurrogateModel& model, const SupportSet& support)
        : model_(model), posterior_(model.kernel, features_of(model, support),
                                    residuals_of(model, support)) {}

    Prediction predict_features(const VectorXd& z) const {
        const double m = model_.mean_std_units(z);
        auto [mu_r, s2] = posterior_.predict(z);
        return {model_.affine.destandardize(m + mu_r),
                s2 * model_.affine.std * model_.affine.std};
    }

    Prediction predict(const Patch& patch) const { return predict_features(model_.encode(patch)); }

    // NLML of the standardized support residuals under the residual GP.
    double nlml() const { return posterior_.nlml(); }

    const GpPosterior& posterior() const { return posterior_; }

private:
    static MatrixXd features_of(const SurrogateModel& model, const SupportSet& support) {
        MatrixXd Z(support.size(), model.encoder.arch.features);
        for (std::size_t i = 0; i < support.size(); ++i)
            Z.row(i) = model.encode(support[i].patch).transpose();
        return Z;
    }
    static VectorXd residuals_of(const SurrogateModel& model, const SupportSet& support) {
        VectorXd rho(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) {
            const VectorXd z = model.encode(support[i].patch);
            rho(i) = model.affine.standardize(support[i].reward) - model.mean_std_units(z);
        }
        return rho;
    }

    const SurrogateModel& model_;
    GpPosterior posterior_;
};

inline Prediction predict(const SurrogateModel& model, const Patch& patch,
                          const SupportSet& support) {
    return ConditionedSurrogate(model, support).predict(patch);
}

inline double nlml(const SurrogateModel& model, const SupportSet& support) {
    if (support.empty()) throw std::invalid_argument("nlml: support must be non-empty");
    return ConditionedSurrogate(model, support).nlml();
}

// Checkpoint format "SMD1": arch, depth scale, parameter vectors, kernel
// hyperparameters, reward affine. Round trips are bit-exact.
inline void save_model(std::ostream& os, const SurrogateModel& model) {
    bin_io::write_magic(os, "SMD1", 1);
    const auto& a = model.encoder.arch;
    for (int v : {a.patch, a.conv1, a.conv2, a.ksize, a.hidden, a.features, model.mean.hidden})
        bin_io::write_pod(os, static_cast<std::int32_t>(v));
    bin_io::write_pod(os, model.encoder.depth_scale);
    auto write_vec = [&os](const VectorXd& v) {
        bin_io::write_pod(os, static_cast<std::uint64_t>(v.size()));
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_vec(model.encoder.params);
    write_vec(model.mean.params);
    bin_io::write_pod(os, model.kernel.log_signal_var);
    bin_io::write_pod(os, model.kernel.log_noise_var);
    write_vec(model.kernel.log_lengthscales);
    bin_io::write_pod(os, model.affine.mean);
    bin_io::write_pod(os, model.affine.std);
}

inline SurrogateModel load_model(std::istream& is) {
    const std::uint32_t version = bin_io::read_magic(is, "SMD1");
    if (version != 1) throw std::runtime_error("model checkpoint: unsupported version");
    EncoderArch arch;
    auto read_i = [&is] { return static_cast<int>(bin_io::read_pod<std::int32_t>(is)); };
    arch.patch = read_i();
    arch.conv1 = read_i();
    arch.conv2 = read_i();
    arch.ksize = read_i();
    arch.hidden = read_i();
    arch.features = read_i();
    const int mean_hidden = read_i();
    arch.validate();
    if (mean_hidden < 1) throw std::runtime_error("model checkpoint: bad mean head size");

    SurrogateModel model;
    model.encoder = FeatureEncoder(arch);
    model.encoder.depth_scale = bin_io::read_pod<double>(is);
    auto read_vec = [&is](Eigen::Index expect) {
        const auto n = bin_io::read_pod<std::uint64_t>(is);
        if (static_cast<Eigen::Index>(n) != expect)
            throw std::runtime_error("model checkpoint: parameter size mismatch");
        VectorXd v(static_cast<Eigen::Index>(n));
        is.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw std::runtime_error("model checkpoint: truncated");
        return v;
    };
    model.encoder.params = read_vec(arch.param_count());
    model.mean = DeepMean(arch.features, mean_hidden);
    model.mean.params = read_vec(model.mean.param_count());
    model.kernel = ResidualKernel::make(arch.features);
    model.kernel.log_signal_var = bin_io::read_pod<double>(is);
    model.kernel.log_noise_var = bin_io::read_pod<double>(is);
    model.kernel.log_lengthscales = read_vec(arch.features);
    model.affine.mean = bin_io::read_pod<double>(is);
    model.affine.std = bin_io::read_pod<double>(is);
    model.validate();
    return model;
}

inline void save_model_file(const std::string& path, const SurrogateModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    save_model(os, model);
}

inline SurrogateModel load_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return load_model(is);
}

}  // namespace scoopsim
