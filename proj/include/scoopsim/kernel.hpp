#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace scoopsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Squared-exponential kernel with per-dimension lengthscales over encoded
// features; hyperparameters live in the log domain so variances stay
// positive. Hyperparameter vector layout: [log_signal_var, log_noise_var,
// log_lengthscales...].
struct ResidualKernel {
    double log_signal_var = 0.0;
    double log_noise_var = std::log(0.01);
    VectorXd log_lengthscales;

    static ResidualKernel make(int feature_dim) {
        ResidualKernel k;
        k.log_lengthscales = VectorXd::Zero(feature_dim);
        return k;
    }

    int dim() const { return static_cast<int>(log_lengthscales.size()); }
    int hyper_count() const { return dim() + 2; }
    double signal_var() const { return std::exp(log_signal_var); }
    double noise_var() const { return std::exp(log_noise_var); }

    VectorXd pack() const {
        VectorXd theta(hyper_count());
        theta(0) = log_signal_var;
        theta(1) = log_noise_var;
        theta.tail(dim()) = log_lengthscales;
        return theta;
    }
    void unpack(const VectorXd& theta) {
        if (theta.size() != hyper_count())
            throw std::invalid_argument("kernel: hyperparameter size mismatch");
        log_signal_var = theta(0);
        log_noise_var = theta(1);
        log_lengthscales = theta.tail(dim());
    }

    double operator()(const VectorXd& a, const VectorXd& b) const {
        double q = 0.0;
        for (int d = 0; d < dim(); ++d) {
            const double s = (a(d) - b(d)) / std::exp(log_lengthscales(d));
            q += s * s;
        }
        return std::exp(log_signal_var - 0.5 * q);
    }

    // Gram matrix with symmetric evaluation order (K == K^T exactly).
    // Inputs are rows of Z.
    MatrixXd gram(const MatrixXd& Z) const {
        const auto n = Z.rows();
        if (n < 1) throw std::invalid_argument("kernel: gram needs >= 1 input");
        MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            K(i, i) = signal_var();
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double v = (*this)(Z.row(i).transpose(), Z.row(j).transpose());
                K(i, j) = v;
                K(j, i) = v;
            }
        }
        return K;
    }

    VectorXd cross(const MatrixXd& Z, const VectorXd& query) const {
        VectorXd k(Z.rows());
        for (Eigen::Index i = 0; i < Z.rows(); ++i)
            k(i) = (*this)(Z.row(i).transpose(), query);
        return k;
    }

    // d k(a, b) / d theta_t for theta packed as above. Noise never enters the
    // kernel value itself.
    double value_grad(const VectorXd& a, const VectorXd& b, int t) const {
        const double v = (*this)(a, b);
        if (t == 0) return v;  // d/d log_sf2
        if (t == 1) return 0.0;
        const int d = t - 2;
        const double ell = std::exp(log_lengthscales(d));
        const double s = (a(d) - b(d)) / ell;
        return v * s * s;  // d/d log_ell = v * r^2 / ell^2
    }

    MatrixXd gram_grad(const MatrixXd& Z, int t) const {
        const auto n = Z.rows();
        MatrixXd G(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            G(i, i) = (t == 0) ? signal_var() : 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double v = value_grad(Z.row(i).transpose(), Z.row(j).transpose(), t);
                G(i, j) = v;
                G(j, i) = v;
            }
        }
        return G;
    }

    VectorXd cross_grad(const MatrixXd& Z, const VectorXd& query, int t) const {
        VectorXd g(Z.rows());
        for (Eigen::Index i = 0; i < Z.rows(); ++i)
            g(i) = value_grad(Z.row(i).transpose(), query, t);
        return g;
    }
};

}  // namespace scoopsim
