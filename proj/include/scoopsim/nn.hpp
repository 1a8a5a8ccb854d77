#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "scoopsim/rng.hpp"

namespace scoopsim::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Planes are stored as (channels x pixels) matrices with row-major pixel
// order: pixel(i, j) = i * width + j.

// Patch extraction for convolution: (C*k*k) x (oh*ow), column per output
// position, entries ordered (channel, di, dj).
inline MatrixXd im2col(const MatrixXd& planes, int h, int w, int k) {
    const int c = static_cast<int>(planes.rows());
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    MatrixXd cols(c * k * k, oh * ow);
    for (int oi = 0; oi < oh; ++oi) {
        for (int oj = 0; oj < ow; ++oj) {
            const int col = oi * ow + oj;
            int row = 0;
            for (int ch = 0; ch < c; ++ch)
                for (int di = 0; di < k; ++di)
                    for (int dj = 0; dj < k; ++dj)
                        cols(row++, col) = planes(ch, (oi + di) * w + (oj + dj));
        }
    }
    return cols;
}

// Adjoint of im2col: scatter-add columns back onto the input planes.
inline MatrixXd col2im(const MatrixXd& cols, int c, int h, int w, int k) {
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    MatrixXd planes = MatrixXd::Zero(c, h * w);
    for (int oi = 0; oi < oh; ++oi) {
        for (int oj = 0; oj < ow; ++oj) {
            const int col = oi * ow + oj;
            int row = 0;
            for (int ch = 0; ch < c; ++ch)
                for (int di = 0; di < k; ++di)
                    for (int dj = 0; dj < k; ++dj)
                        planes(ch, (oi + di) * w + (oj + dj)) += cols(row++, col);
        }
    }
    return planes;
}

// 2x2 average pooling with stride 2; trailing odd row/column dropped.
inline MatrixXd avgpool2(const MatrixXd& planes, int h, int w) {
    const int c = static_cast<int>(planes.rows());
    const int ph = h / 2;
    const int pw = w / 2;
    MatrixXd out(c, ph * pw);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < ph; ++i)
            for (int j = 0; j < pw; ++j)
                out(ch, i * pw + j) = 0.25 * (planes(ch, (2 * i) * w + 2 * j) +
                                              planes(ch, (2 * i) * w + 2 * j + 1) +
                                              planes(ch, (2 * i + 1) * w + 2 * j) +
                                              planes(ch, (2 * i + 1) * w + 2 * j + 1));
    return out;
}

inline MatrixXd avgpool2_backward(const MatrixXd& dout, int h, int w) {
    const int c = static_cast<int>(dout.rows());
    const int ph = h / 2;
    const int pw = w / 2;
    MatrixXd din = MatrixXd::Zero(c, h * w);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < ph; ++i)
            for (int j = 0; j < pw; ++j) {
                const double g = 0.25 * dout(ch, i * pw + j);
                din(ch, (2 * i) * w + 2 * j) = g;
                din(ch, (2 * i) * w + 2 * j + 1) = g;
                din(ch, (2 * i + 1) * w + 2 * j) = g;
                din(ch, (2 * i + 1) * w + 2 * j + 1) = g;
            }
    return din;
}

inline MatrixXd tanh_forward(const MatrixXd& x) { return x.array().tanh().matrix(); }

// d(tanh)/dx expressed with the forward output.
inline MatrixXd tanh_backward(const MatrixXd& dout, const MatrixXd& out) {
    return (dout.array() * (1.0 - out.array().square())).matrix();
}

// Xavier-uniform init for tanh layers, deterministic per rng state.
inline void xavier_fill(Eigen::Ref<VectorXd> w, int fan_in, int fan_out, std::mt19937_64& rng) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = u(rng);
}

// Plain SGD with momentum; the only optimizer used in training.
struct SgdMomentum {
    double lr = 1e-2;
    double momentum = 0.9;
    VectorXd velocity;

    void step(VectorXd& params, const VectorXd& grad) {
        if (velocity.size() != params.size()) velocity = VectorXd::Zero(params.size());
        velocity = momentum * velocity - lr * grad;
        params += velocity;
    }
};

}  // namespace scoopsim::nn
