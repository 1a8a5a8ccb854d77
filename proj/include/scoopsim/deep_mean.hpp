#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "scoopsim/nn.hpp"

namespace scoopsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Reward-mean head over encoded features: one tanh hidden layer and a linear
// output, in standardized reward units.
class DeepMean {
public:
    int in_dim = 16;
    int hidden = 16;
    VectorXd params;

    DeepMean() = default;
    DeepMean(int features, int hidden_width) : in_dim(features), hidden(hidden_width) {
        if (features < 1 || hidden_width < 1)
            throw std::invalid_argument("deep mean: bad dimensions");
        params = VectorXd::Zero(param_count());
    }

    int param_count() const { return hidden * in_dim + hidden + hidden + 1; }

    void init_random(std::uint64_t seed) {
        auto rng = make_rng(mix64(seed, 0x3ea17ULL));
        nn::xavier_fill(params.segment(0, hidden * in_dim), in_dim, hidden, rng);
        params.segment(hidden * in_dim, hidden).setZero();
        nn::xavier_fill(params.segment(hidden * in_dim + hidden, hidden), hidden, 1, rng);
        params(params.size() - 1) = 0.0;
    }

    struct Trace {
        VectorXd input, h;
    };

    double forward(const VectorXd& z, Trace* trace = nullptr) const {
        if (z.size() != in_dim) throw std::invalid_argument("deep mean: feature dim mismatch");
        Trace local;
        Trace& t = trace ? *trace : local;
        t.input = z;
        t.h = (W1() * z + b1()).array().tanh().matrix();
        return w2().dot(t.h) + b2();
    }

    struct Gradients {
        VectorXd params;
        VectorXd input;
    };

    Gradients backward(const Trace& t, double dout) const {
        Gradients g;
        g.params = VectorXd::Zero(params.size());
        VectorXd dh = w2() * dout;
        g.params.segment(hidden * in_dim + hidden, hidden) = t.h * dout;  // w2
        g.params(params.size() - 1) = dout;                               // b2
        VectorXd dpre = (dh.array() * (1.0 - t.h.array().square())).matrix();
        Eigen::Map<MatrixXd>(g.params.data(), hidden, in_dim) = dpre * t.input.transpose();
        g.params.segment(hidden * in_dim, hidden) = dpre;  // b1
        g.input = W1().transpose() * dpre;
        return g;
    }

private:
    Eigen::Map<const MatrixXd> W1() const { return {params.data(), hidden, in_dim}; }
    VectorXd b1() const { return params.segment(hidden * in_dim, hidden); }
    VectorXd w2() const { return params.segment(hidden * in_dim + hidden, hidden); }
    double b2() const { return params(params.size() - 1); }
};

}  // namespace scoopsim
