#pragma once

#include "rfpose/ad/graph.hpp"

namespace rfpose::ad {

enum class Act { Identity, Relu, Tanh, Sigmoid };

// Elementwise; shapes must match exactly (no broadcasting).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, real s);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh_(const Var& x);

// W [m x n] * x [n] -> [m]
Var matvec(const Var& W, const Var& x);

// act(W x + b). The workhorse of the dense layers.
Var affine(const Var& W, const Var& x, const Var& b, Act act = Act::Identity);

// Cross-correlation (deep-learning "convolution"): input [C,H,W],
// kernel [F,C,kh,kw], optional bias [F], zero padding.
Var conv2d(const Var& input, const Var& kernel, const Var& bias, int stride, int pad);
Var conv2d(const Var& input, const Var& kernel, int stride, int pad);

Var sum(const Var& x);
Var add_n(const std::vector<Var>& xs);  // scalar accumulate

Var slice1d(const Var& x, int offset, int len);
Var concat1d(const std::vector<Var>& xs);
Var flatten(const Var& x);
// single element by flat index -> scalar
Var pick(const Var& x, int flat_index);

// elementwise a*x + b
Var ax_plus_b(const Var& x, real a, real b);
// s * exp(clamp(x, -c, c)); the clamp guards box decoding against overflow
Var scaled_exp(const Var& x, real s, real clamp_abs);

// sum_i w_i * BCE(sigmoid(x_i), t_i), computed in stable logit form
Var bce_logits_sum(const Var& x, const std::vector<real>& targets,
                   const std::vector<real>& weights);

// sum_i smoothL1(a_i - t_i), transition point 1.0
Var smooth_l1_sum(const Var& a, const std::vector<real>& target);
// sum_i |a_i - b_i|
Var l1_diff_sum(const Var& a, const Var& b);
// ||a - b||_2 (eps-stabilized at zero)
Var l2_distance(const Var& a, const Var& b);
// min(x, cap) on a scalar
Var clamp_max(const Var& x, real cap);

// weight * (-log softmax(logits)[target]), max-stabilized
Var softmax_cross_entropy(const Var& logits, int target, real weight);

// Bilinear crop-and-resize of one box to out_h x out_w. The box is given in
// feature-map coordinates (center x, center y, width, height) and is treated
// as a constant: gradients flow into the feature map only.
Var roi_pool(const Var& feat, real cx, real cy, real w, real h, int out_h, int out_w);

// Non-graph helpers.
std::vector<real> softmax_values(const std::vector<real>& logits);
int argmax(const std::vector<real>& v);

}  // namespace rfpose::ad
