#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "scoopsim/nn.hpp"
#include "scoopsim/patch.hpp"

namespace scoopsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Two conv/pool stages on the depth patch, color folded in as channel means,
// one hidden layer, action parameters concatenated before the linear output.
struct EncoderArch {
    int patch = 32;     // P
    int conv1 = 4;      // channels
    int conv2 = 8;
    int ksize = 3;
    int hidden = 32;
    int features = 16;  // F

    int s1() const { return patch - ksize + 1; }
    int p1() const { return s1() / 2; }
    int s2() const { return p1() - ksize + 1; }
    int p2() const { return s2() / 2; }
    int flat() const { return conv2 * p2() * p2(); }
    int fc1_in() const { return flat() + 3; }   // + color channel means
    int fc2_in() const { return hidden + 3; }   // + (depth, stiffness one-hot)

    int conv1_w() const { return conv1 * ksize * ksize; }
    int conv2_w() const { return conv2 * conv1 * ksize * ksize; }
    int fc1_w() const { return hidden * fc1_in(); }
    int fc2_w() const { return features * fc2_in(); }
    int param_count() const {
        return conv1_w() + conv1 + conv2_w() + conv2 + fc1_w() + hidden + fc2_w() + features;
    }

    void validate() const {
        if (patch < 2 * ksize || s2() < 2 || p2() < 1 || conv1 < 1 || conv2 < 1 || hidden < 1 ||
            features < 1)
            throw std::invalid_argument("encoder arch: dimensions do not compose");
    }

    bool operator==(const EncoderArch&) const = default;
};

// Continuous encoder input derived from a Patch.
struct EncoderInput {
    MatrixXd depth;           // P x P, cm (center-normalized)
    Eigen::Vector3d color;    // channel means, [0, 1]
    Eigen::Vector3d action;   // depth_cm, one-hot stiffness (low, high)
};

inline EncoderInput make_encoder_input(const Patch& patch) {
    EncoderInput in;
    in.depth = patch.depth.cast<double>();
    for (int c = 0; c < 3; ++c)
        in.color(c) = static_cast<double>(patch.color[c].template cast<double>().mean());
    in.action = {patch.action_depth, patch.stiffness == Stiffness::Low ? 1.0 : 0.0,
                 patch.stiffness == Stiffness::High ? 1.0 : 0.0};
    return in;
}

// Same pixels, different action parameters; used when candidates share one
// extracted patch across the depth set.
inline EncoderInput make_encoder_input(const Patch& patch, double action_depth,
                                       Stiffness stiffness) {
    EncoderInput in = make_encoder_input(patch);
    in.action = {action_depth, stiffness == Stiffness::Low ? 1.0 : 0.0,
                 stiffness == Stiffness::High ? 1.0 : 0.0};
    return in;
}

// Intermediate activations kept for the backward pass.
struct EncoderTrace {
    MatrixXd depth_plane;  // 1 x P^2, scaled
    MatrixXd cols1, a1, pool1;
    MatrixXd cols2, a2, pool2;
    VectorXd x_fc1, h1, z_fc2;
    VectorXd features;
};

struct EncoderGradients {
    VectorXd params;       // same layout as the parameter vector
    MatrixXd input_depth;  // P x P
    Eigen::Vector3d input_color;
    Eigen::Vector3d input_action;
};

class FeatureEncoder {
public:
    EncoderArch arch;
    VectorXd params;
    double depth_scale = 5.0;  // cm scale applied to the depth plane

    FeatureEncoder() = default;
    explicit FeatureEncoder(const EncoderArch& a) : arch(a) {
        arch.validate();
        params = VectorXd::Zero(arch.param_count());
    }

    void init_random(std::uint64_t seed) {
        auto rng = make_rng(mix64(seed, 0xe2c0de2ULL));
        const int k2 = arch.ksize * arch.ksize;
        nn::xavier_fill(w1(), k2, arch.conv1 * k2, rng);
        b1().setZero();
        nn::xavier_fill(w2(), arch.conv1 * k2, arch.conv2 * k2, rng);
        b2().setZero();
        nn::xavier_fill(wf1(), arch.fc1_in(), arch.hidden, rng);
        bf1().setZero();
        nn::xavier_fill(wf2(), arch.fc2_in(), arch.features, rng);
        bf2().setZero();
    }

    VectorXd forward(const EncoderInput& in, EncoderTrace* trace = nullptr) const {
        if (in.depth.rows() != arch.patch || in.depth.cols() != arch.patch)
            throw std::invalid_argument("encoder: depth patch dimension mismatch");
        const int P = arch.patch;
        const int k = arch.ksize;

        EncoderTrace local;
        EncoderTrace& t = trace ? *trace : local;

        t.depth_plane.resize(1, P * P);
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < P; ++j) t.depth_plane(0, i * P + j) = in.depth(i, j) / depth_scale;

        t.cols1 = nn::im2col(t.depth_plane, P, P, k);
        MatrixXd pre1 = (W1() * t.cols1).colwise() + b1v();
        t.a1 = nn::tanh_forward(pre1);
        t.pool1 = nn::avgpool2(t.a1, arch.s1(), arch.s1());

        t.cols2 = nn::im2col(t.pool1, arch.p1(), arch.p1(), k);
        MatrixXd pre2 = (W2() * t.cols2).colwise() + b2v();
        t.a2 = nn::tanh_forward(pre2);
        t.pool2 = nn::avgpool2(t.a2, arch.s2(), arch.s2());

        t.x_fc1.resize(arch.fc1_in());
        int idx = 0;
        for (int c = 0; c < arch.conv2; ++c)
            for (int p = 0; p < arch.p2() * arch.p2(); ++p) t.x_fc1(idx++) = t.pool2(c, p);
        t.x_fc1.segment(arch.flat(), 3) = in.color;

        t.h1 = (Wf1() * t.x_fc1 + bf1v()).array().tanh().matrix();

        t.z_fc2.resize(arch.fc2_in());
        t.z_fc2.head(arch.hidden) = t.h1;
        t.z_fc2.tail(3) = in.action;
        t.features = Wf2() * t.z_fc2 + bf2v();
        return t.features;
    }

    // Accumulates parameter gradients into `param_accum` (same layout as the
    // parameter vector); input gradients are computed only on request since
    // training never needs them.
    void backward_accumulate(const EncoderTrace& t, const VectorXd& dfeatures,
                             VectorXd& param_accum, EncoderGradients* input_grads = nullptr) const {
        const int P = arch.patch;
        const int k = arch.ksize;
        auto block = [&](int off, int rows, int cols) {
            return Eigen::Map<MatrixXd>(param_accum.data() + off, rows, cols);
        };
        auto seg = [&](int off, int n) { return param_accum.segment(off, n); };

        // fc2 (linear)
        block(off_wf2(), arch.features, arch.fc2_in()).noalias() +=
            dfeatures * t.z_fc2.transpose();
        seg(off_bf2(), arch.features) += dfeatures;
        VectorXd dz = Wf2().transpose() * dfeatures;

        // fc1 (tanh)
        VectorXd dpre1 =
            (dz.head(arch.hidden).array() * (1.0 - t.h1.array().square())).matrix();
        block(off_wf1(), arch.hidden, arch.fc1_in()).noalias() += dpre1 * t.x_fc1.transpose();
        seg(off_bf1(), arch.hidden) += dpre1;
        VectorXd dx = Wf1().transpose() * dpre1;

        // unflatten to pooled conv2 planes
        MatrixXd dpool2(arch.conv2, arch.p2() * arch.p2());
        int idx = 0;
        for (int c = 0; c < arch.conv2; ++c)
            for (int p = 0; p < arch.p2() * arch.p2(); ++p) dpool2(c, p) = dx(idx++);

        // conv2 stage
        MatrixXd dpre2 =
            nn::tanh_backward(nn::avgpool2_backward(dpool2, arch.s2(), arch.s2()), t.a2);
        block(off_w2(), arch.conv2, arch.conv1 * k * k).noalias() +=
            dpre2 * t.cols2.transpose();
        seg(off_b2(), arch.conv2) += dpre2.rowwise().sum();
        MatrixXd dcols2 = W2().transpose() * dpre2;
        MatrixXd dpool1 = nn::col2im(dcols2, arch.conv1, arch.p1(), arch.p1(), k);

        // conv1 stage
        MatrixXd dpre1c =
            nn::tanh_backward(nn::avgpool2_backward(dpool1, arch.s1(), arch.s1()), t.a1);
        block(off_w1(), arch.conv1, k * k).noalias() += dpre1c * t.cols1.transpose();
        seg(off_b1(), arch.conv1) += dpre1c.rowwise().sum();

        if (input_grads) {
            input_grads->input_action = dz.tail(3);
            input_grads->input_color = dx.segment(arch.flat(), 3);
            MatrixXd dcols1 = W1().transpose() * dpre1c;
            MatrixXd dplane = nn::col2im(dcols1, 1, P, P, k);
            input_grads->input_depth.resize(P, P);
            for (int i = 0; i < P; ++i)
                for (int j = 0; j < P; ++j)
                    input_grads->input_depth(i, j) = dplane(0, i * P + j) / depth_scale;
        }
    }

    EncoderGradients backward(const EncoderTrace& t, const VectorXd& dfeatures) const {
        EncoderGradients g;
        g.params = VectorXd::Zero(params.size());
        backward_accumulate(t, dfeatures, g.params, &g);
        return g;
    }

    // Parameter views, ordered: conv1 W/b, conv2 W/b, fc1 W/b, fc2 W/b.
    int off_w1() const { return 0; }
    int off_b1() const { return off_w1() + arch.conv1_w(); }
    int off_w2() const { return off_b1() + arch.conv1; }
    int off_b2() const { return off_w2() + arch.conv2_w(); }
    int off_wf1() const { return off_b2() + arch.conv2; }
    int off_bf1() const { return off_wf1() + arch.fc1_w(); }
    int off_wf2() const { return off_bf1() + arch.hidden; }
    int off_bf2() const { return off_wf2() + arch.fc2_w(); }

private:
    using ConstMap = Eigen::Map<const MatrixXd>;

    ConstMap W1() const {
        return {params.data() + off_w1(), arch.conv1, arch.ksize * arch.ksize};
    }
    ConstMap W2() const {
        return {params.data() + off_w2(), arch.conv2, arch.conv1 * arch.ksize * arch.ksize};
    }
    ConstMap Wf1() const { return {params.data() + off_wf1(), arch.hidden, arch.fc1_in()}; }
    ConstMap Wf2() const { return {params.data() + off_wf2(), arch.features, arch.fc2_in()}; }
    VectorXd b1v() const { return params.segment(off_b1(), arch.conv1); }
    VectorXd b2v() const { return params.segment(off_b2(), arch.conv2); }
    VectorXd bf1v() const { return params.segment(off_bf1(), arch.hidden); }
    VectorXd bf2v() const { return params.segment(off_bf2(), arch.features); }

    Eigen::Ref<VectorXd> w1() { return params.segment(off_w1(), arch.conv1_w()); }
    Eigen::Ref<VectorXd> b1() { return params.segment(off_b1(), arch.conv1); }
    Eigen::Ref<VectorXd> w2() { return params.segment(off_w2(), arch.conv2_w()); }
    Eigen::Ref<VectorXd> b2() { return params.segment(off_b2(), arch.conv2); }
    Eigen::Ref<VectorXd> wf1() { return params.segment(off_wf1(), arch.fc1_w()); }
    Eigen::Ref<VectorXd> bf1() { return params.segment(off_bf1(), arch.hidden); }
    Eigen::Ref<VectorXd> wf2() { return params.segment(off_wf2(), arch.fc2_w()); }
    Eigen::Ref<VectorXd> bf2() { return params.segment(off_bf2(), arch.features); }

};

}  // namespace scoopsim
