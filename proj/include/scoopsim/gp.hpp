#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "scoopsim/kernel.hpp"

namespace scoopsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Cholesky of a symmetric PSD matrix with escalating diagonal jitter:
// starts at 1e-10 * scale and multiplies by 10 up to 1e-4 * scale before
// giving up.
inline Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& A, double scale) {
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) return llt;
    for (double jitter = 1e-10 * scale; jitter <= 1e-4 * scale * (1.0 + 1e-12); jitter *= 10.0) {
        MatrixXd Aj = A;
        Aj.diagonal().array() += jitter;
        llt.compute(Aj);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw std::runtime_error("gp: Cholesky failed after maximum jitter escalation");
}

// Zero-mean GP over residuals, conditioned once on a support set and then
// queried many times. Empty support falls back to the prior.
class GpPosterior {
public:
    GpPosterior(const ResidualKernel& kernel, MatrixXd support_features, VectorXd residuals)
        : kernel_(kernel), Z_(std::move(support_features)), rho_(std::move(residuals)) {
        if (Z_.rows() != rho_.size())
            throw std::invalid_argument("gp: support features/residuals size mismatch");
        if (!rho_.allFinite() || !Z_.allFinite())
            throw std::invalid_argument("gp: non-finite support inputs");
        if (Z_.rows() > 0) {
            MatrixXd A = kernel_.gram(Z_);
            A.diagonal().array() += kernel_.noise_var();
            llt_ = cholesky_with_jitter(A, kernel_.signal_var());
            alpha_ = llt_.solve(rho_);
        }
    }

    Eigen::Index support_size() const { return Z_.rows(); }

    // Posterior mean and (noise-free) function variance at a query feature.
    std::pair<double, double> predict(const VectorXd& z) const {
        if (!z.allFinite()) throw std::invalid_argument("gp: non-finite query");
        const double kss = kernel_.signal_var();
        if (Z_.rows() == 0) return {0.0, kss};
        const VectorXd ks = kernel_.cross(Z_, z);
        const double mu = ks.dot(alpha_);
        const VectorXd v = llt_.matrixL().solve(ks);
        const double s2 = std::max(kss - v.squaredNorm(), 0.0);
        return {mu, s2};
    }

    // Negative log marginal likelihood of the support residuals.
    double nlml() const {
        if (Z_.rows() == 0) throw std::invalid_argument("gp: nlml needs support");
        const auto n = static_cast<double>(Z_.rows());
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < Z_.rows(); ++i)
            logdet += 2.0 * std::log(llt_.matrixL()(i, i));
        return 0.5 * (rho_.dot(alpha_) + logdet + n * std::log(kTwoPi));
    }

    const MatrixXd& support_features() const { return Z_; }
    const VectorXd& residuals() const { return rho_; }
    const Eigen::LLT<MatrixXd>& llt() const { return llt_; }
    const VectorXd& alpha() const { return alpha_; }

private:
    ResidualKernel kernel_;
    MatrixXd Z_;
    VectorXd rho_;
    Eigen::LLT<MatrixXd> llt_;
    VectorXd alpha_;
};

// Negative log predictive likelihood of an observed query residual given a
// support set (the episodic training objective), with analytic gradients
// w.r.t. the packed kernel hyperparameters.
struct EpisodicNll {
    double value = 0.0;
    VectorXd grad;  // d value / d theta
};

inline EpisodicNll episodic_predictive_nll(const ResidualKernel& kernel, const MatrixXd& Zs,
                                           const VectorXd& rho_s, const VectorXd& z_query,
                                           double rho_query, bool with_grad = true) {
    const int nt = kernel.hyper_count();
    const double noise = kernel.noise_var();
    EpisodicNll out;
    out.grad = VectorXd::Zero(nt);

    if (Zs.rows() == 0) {
        const double v = kernel.signal_var() + noise;
        const double e = rho_query;
        out.value = 0.5 * (std::log(kTwoPi * v) + e * e / v);
        if (with_grad) {
            const double dnll_dv = 0.5 / v - 0.5 * e * e / (v * v);
            out.grad(0) = dnll_dv * kernel.signal_var();
            out.grad(1) = dnll_dv * noise;
        }
        return out;
    }

    MatrixXd A = kernel.gram(Zs);
    A.diagonal().array() += noise;
    const auto llt = cholesky_with_jitter(A, kernel.signal_var());
    const VectorXd alpha = llt.solve(rho_s);
    const VectorXd ks = kernel.cross(Zs, z_query);
    const VectorXd B = llt.solve(ks);

    const double kss = kernel.signal_var();
    const double mu = ks.dot(alpha);
    const double s2 = std::max(kss - ks.dot(B), 0.0);
    const double v = s2 + noise;
    const double e = rho_query - mu;
    out.value = 0.5 * (std::log(kTwoPi * v) + e * e / v);

    if (!with_grad) return out;
    const double dnll_dv = 0.5 / v - 0.5 * e * e / (v * v);
    const double dnll_dmu = -e / v;
    for (int t = 0; t < nt; ++t) {
        MatrixXd dA = kernel.gram_grad(Zs, t);
        if (t == 1) dA.diagonal().array() += noise;  // noise enters A's diagonal
        const VectorXd dks = kernel.cross_grad(Zs, z_query, t);
        const double dkss = (t == 0) ? kss : 0.0;
        const double dmu = dks.dot(alpha) - B.dot(dA * alpha);
        double ds2 = dkss - 2.0 * dks.dot(B) + B.dot(dA * B);
        double dv = ds2 + ((t == 1) ? noise : 0.0);
        out.grad(t) = dnll_dv * dv + dnll_dmu * dmu;
    }
    return out;
}

// Marginal NLML of residuals with analytic hyperparameter gradients; the
// alternative (non-episodic) kernel training objective.
inline EpisodicNll marginal_nlml(const ResidualKernel& kernel, const MatrixXd& Zs,
                                 const VectorXd& rho_s, bool with_grad = true) {
    if (Zs.rows() == 0) throw std::invalid_argument("gp: nlml needs support");
    const int nt = kernel.hyper_count();
    const double noise = kernel.noise_var();
    MatrixXd A = kernel.gram(Zs);
    A.diagonal().array() += noise;
    const auto llt = cholesky_with_jitter(A, kernel.signal_var());
    const VectorXd alpha = llt.solve(rho_s);

    EpisodicNll out;
    out.grad = VectorXd::Zero(nt);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < Zs.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const auto n = static_cast<double>(Zs.rows());
    out.value = 0.5 * (rho_s.dot(alpha) + logdet + n * std::log(kTwoPi));

    if (!with_grad) return out;
    const MatrixXd Ainv = llt.solve(MatrixXd::Identity(Zs.rows(), Zs.rows()));
    for (int t = 0; t < nt; ++t) {
        MatrixXd dA = kernel.gram_grad(Zs, t);
        if (t == 1) dA.diagonal().array() += noise;
        out.grad(t) = 0.5 * (Ainv * dA).trace() - 0.5 * alpha.dot(dA * alpha);
    }
    return out;
}

}  // namespace scoopsim
