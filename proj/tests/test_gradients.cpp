#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scoopsim/encoder.hpp"
#include "scoopsim/gp.hpp"
#include "scoopsim/training.hpp"

using namespace scoopsim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

EncoderArch small_arch() {
    EncoderArch a;
    a.patch = 12;
    a.conv1 = 2;
    a.conv2 = 3;
    a.hidden = 8;
    a.features = 6;
    return a;
}

EncoderInput random_input(int P, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    EncoderInput in;
    in.depth.resize(P, P);
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) in.depth(i, j) = u(rng);
    in.color = {0.4 + 0.1 * u(rng), 0.5 + 0.1 * u(rng), 0.3 + 0.1 * u(rng)};
    in.action = {0.2 + 0.1 * std::abs(u(rng)), 0.0, 1.0};
    return in;
}

double rel_gap(const VectorXd& a, const VectorXd& b) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

}  // namespace

TEST_CASE("encoder: Jacobian-vector products match central differences") {
    auto arch = small_arch();
    FeatureEncoder enc(arch);
    enc.init_random(101);
    std::mt19937_64 rng(7);
    const int P = arch.patch;

    for (int trial = 0; trial < 5; ++trial) {
        EncoderInput in = random_input(P, rng);

        // Assemble the full input Jacobian from one backward pass per output.
        const int in_dim = P * P + 3 + 3;
        MatrixXd J(arch.features, in_dim);
        EncoderTrace trace;
        enc.forward(in, &trace);
        for (int f = 0; f < arch.features; ++f) {
            VectorXd df = VectorXd::Zero(arch.features);
            df(f) = 1.0;
            const auto g = enc.backward(trace, df);
            for (int i = 0; i < P; ++i)
                for (int j = 0; j < P; ++j) J(f, i * P + j) = g.input_depth(i, j);
            J.block(f, P * P, 1, 3) = g.input_color.transpose();
            J.block(f, P * P + 3, 1, 3) = g.input_action.transpose();
        }

        std::normal_distribution<double> n;
        VectorXd v(in_dim);
        for (int i = 0; i < in_dim; ++i) v(i) = n(rng);
        const VectorXd jvp = J * v;

        const double h = 1e-5;
        auto perturb = [&](double sign) {
            EncoderInput p = in;
            for (int i = 0; i < P; ++i)
                for (int j = 0; j < P; ++j) p.depth(i, j) += sign * h * v(i * P + j);
            for (int c = 0; c < 3; ++c) p.color(c) += sign * h * v(P * P + c);
            for (int c = 0; c < 3; ++c) p.action(c) += sign * h * v(P * P + 3 + c);
            return enc.forward(p);
        };
        const VectorXd fd = (perturb(1.0) - perturb(-1.0)) / (2.0 * h);
        CHECK(rel_gap(jvp, fd) < 1e-4);
    }
}

TEST_CASE("mean-squared loss: encoder and mean parameter gradients match finite differences") {
    auto arch = small_arch();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;

    for (int trial = 0; trial < 5; ++trial) {
        FeatureEncoder enc(arch);
        enc.init_random(200 + trial);
        DeepMean mean(arch.features, 8);
        mean.init_random(300 + trial);

        std::vector<EncoderInput> inputs;
        std::vector<double> targets;
        for (int i = 0; i < 4; ++i) {
            inputs.push_back(random_input(arch.patch, rng));
            targets.push_back(n(rng));
        }

        VectorXd ge, gm;
        mean_loss_and_grad(enc, mean, inputs, targets, &ge, &gm);

        const double h = 1e-6;
        VectorXd fd_e(enc.params.size());
        for (Eigen::Index p = 0; p < enc.params.size(); ++p) {
            FeatureEncoder e2 = enc;
            e2.params(p) += h;
            const double lp = mean_loss_and_grad(e2, mean, inputs, targets, nullptr, nullptr);
            e2.params(p) -= 2 * h;
            const double lm = mean_loss_and_grad(e2, mean, inputs, targets, nullptr, nullptr);
            fd_e(p) = (lp - lm) / (2 * h);
        }
        CHECK(rel_gap(ge, fd_e) < 1e-4);

        VectorXd fd_m(mean.params.size());
        for (Eigen::Index p = 0; p < mean.params.size(); ++p) {
            DeepMean m2 = mean;
            m2.params(p) += h;
            const double lp = mean_loss_and_grad(enc, m2, inputs, targets, nullptr, nullptr);
            m2.params(p) -= 2 * h;
            const double lm = mean_loss_and_grad(enc, m2, inputs, targets, nullptr, nullptr);
            fd_m(p) = (lp - lm) / (2 * h);
        }
        CHECK(rel_gap(gm, fd_m) < 1e-4);
    }
}

TEST_CASE("kernel objectives: hyperparameter gradients match finite differences") {
    std::mt19937_64 rng(27);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(-0.6, 0.6);

    for (int trial = 0; trial < 8; ++trial) {
        const int dim = 3;
        ResidualKernel k = ResidualKernel::make(dim);
        k.log_signal_var = u(rng);
        k.log_noise_var = std::log(0.05) + u(rng);
        for (int d = 0; d < dim; ++d) k.log_lengthscales(d) = 0.4 * u(rng);

        const auto ns = static_cast<Eigen::Index>(trial % 5);  // support sizes 0..4
        MatrixXd Zs(ns, dim);
        VectorXd rho(ns);
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (int d = 0; d < dim; ++d) Zs(i, d) = n(rng);
            rho(i) = n(rng);
        }
        VectorXd zq(dim);
        for (int d = 0; d < dim; ++d) zq(d) = n(rng);
        const double rq = n(rng);

        auto value_at = [&](const VectorXd& theta, bool episodic) {
            ResidualKernel kk = k;
            kk.unpack(theta);
            if (episodic) return episodic_predictive_nll(kk, Zs, rho, zq, rq, false).value;
            return marginal_nlml(kk, Zs, rho, false).value;
        };

        const auto ep = episodic_predictive_nll(k, Zs, rho, zq, rq, true);
        const double h = 1e-6;
        VectorXd theta = k.pack();
        VectorXd fd(theta.size());
        for (Eigen::Index t = 0; t < theta.size(); ++t) {
            VectorXd tp = theta, tm = theta;
            tp(t) += h;
            tm(t) -= h;
            fd(t) = (value_at(tp, true) - value_at(tm, true)) / (2 * h);
        }
        CHECK(rel_gap(ep.grad, fd) < 1e-4);

        if (ns > 0) {
            const auto mg = marginal_nlml(k, Zs, rho, true);
            for (Eigen::Index t = 0; t < theta.size(); ++t) {
                VectorXd tp = theta, tm = theta;
                tp(t) += h;
                tm(t) -= h;
                fd(t) = (value_at(tp, false) - value_at(tm, false)) / (2 * h);
            }
            CHECK(rel_gap(mg.grad, fd) < 1e-4);
        }
    }
}
