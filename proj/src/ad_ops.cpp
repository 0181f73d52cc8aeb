#include "rfpose/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rfpose::ad {

using detail::make_node;

static void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                 " vs " + shape_str(b.shape()));
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = a.value()[i] + b.value()[i];
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            for (int p = 0; p < 2; ++p) {
                Node& par = *self.parents[p];
                if (!par.needs_grad) continue;
                for (size_t i = 0; i < self.count(); ++i) par.grad[i] += self.grad[i];
            }
        };
    return Var(n);
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = a.value()[i] - b.value()[i];
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            if (pa.needs_grad)
                for (size_t i = 0; i < self.count(); ++i) pa.grad[i] += self.grad[i];
            if (pb.needs_grad)
                for (size_t i = 0; i < self.count(); ++i) pb.grad[i] -= self.grad[i];
        };
    return Var(n);
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = a.value()[i] * b.value()[i];
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            if (pa.needs_grad)
                for (size_t i = 0; i < self.count(); ++i) pa.grad[i] += self.grad[i] * pb.val[i];
            if (pb.needs_grad)
                for (size_t i = 0; i < self.count(); ++i) pb.grad[i] += self.grad[i] * pa.val[i];
        };
    return Var(n);
}

Var scale(const Var& a, real s) {
    auto n = make_node(a.shape(), {a.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = a.value()[i] * s;
    if (n->needs_grad)
        n->backprop = [s](Node& self) {
            Node& pa = *self.parents[0];
            for (size_t i = 0; i < self.count(); ++i) pa.grad[i] += self.grad[i] * s;
        };
    return Var(n);
}

static real apply_act(real v, Act act) {
    switch (act) {
        case Act::Identity: return v;
        case Act::Relu: return v > 0.0f ? v : 0.0f;
        case Act::Tanh: return std::tanh(v);
        case Act::Sigmoid: return 1.0f / (1.0f + std::exp(-v));
    }
    return v;
}

// derivative expressed through the activated output
static real act_deriv(real out, Act act) {
    switch (act) {
        case Act::Identity: return 1.0f;
        case Act::Relu: return out > 0.0f ? 1.0f : 0.0f;
        case Act::Tanh: return 1.0f - out * out;
        case Act::Sigmoid: return out * (1.0f - out);
    }
    return 1.0f;
}

static Var unary_act(const Var& x, Act act) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = apply_act(x.value()[i], act);
    if (n->needs_grad)
        n->backprop = [act](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < self.count(); ++i)
                p.grad[i] += self.grad[i] * act_deriv(self.val[i], act);
        };
    return Var(n);
}

Var relu(const Var& x) { return unary_act(x, Act::Relu); }
Var sigmoid(const Var& x) { return unary_act(x, Act::Sigmoid); }
Var tanh_(const Var& x) { return unary_act(x, Act::Tanh); }

Var matvec(const Var& W, const Var& x) {
    if (W.shape().size() != 2 || x.shape().size() != 1 || W.shape()[1] != x.shape()[0])
        throw std::runtime_error("matvec: shape mismatch " + shape_str(W.shape()) + " vs " +
                                 shape_str(x.shape()));
    int m = W.shape()[0], k = W.shape()[1];
    auto n = make_node({m}, {W.node(), x.node()});
    const real* __restrict__ xv = x.value().data();
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        const real* __restrict__ row = W.value().data() + size_t(i) * k;
        for (int j = 0; j < k; ++j) acc += double(row[j]) * xv[j];
        n->val[i] = real(acc);
    }
    if (n->needs_grad)
        n->backprop = [m, k](Node& self) {
            Node& pw = *self.parents[0];
            Node& px = *self.parents[1];
            if (pw.needs_grad)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < k; ++j)
                        pw.grad[size_t(i) * k + j] += self.grad[i] * px.val[j];
            if (px.needs_grad)
                for (int j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i) acc += double(self.grad[i]) * pw.val[size_t(i) * k + j];
                    px.grad[j] += real(acc);
                }
        };
    return Var(n);
}

Var affine(const Var& W, const Var& x, const Var& b, Act act) {
    if (W.shape().size() != 2 || x.shape().size() != 1 || W.shape()[1] != x.shape()[0] ||
        b.shape() != Shape{W.shape()[0]})
        throw std::runtime_error("affine: shape mismatch W=" + shape_str(W.shape()) +
                                 " x=" + shape_str(x.shape()) + " b=" + shape_str(b.shape()));
    int m = W.shape()[0], k = W.shape()[1];
    auto n = make_node({m}, {W.node(), x.node(), b.node()});
    const real* __restrict__ xin = x.value().data();
    for (int i = 0; i < m; ++i) {
        double acc = b.value()[i];
        const real* __restrict__ row = W.value().data() + size_t(i) * k;
        for (int j = 0; j < k; ++j) acc += double(row[j]) * xin[j];
        n->val[i] = apply_act(real(acc), act);
    }
    if (n->needs_grad)
        n->backprop = [m, k, act](Node& self) {
            Node& pw = *self.parents[0];
            Node& px = *self.parents[1];
            Node& pb = *self.parents[2];
            std::vector<real> g(m);
            for (int i = 0; i < m; ++i) g[i] = self.grad[i] * act_deriv(self.val[i], act);
            if (pb.needs_grad)
                for (int i = 0; i < m; ++i) pb.grad[i] += g[i];
            if (pw.needs_grad)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < k; ++j) pw.grad[size_t(i) * k + j] += g[i] * px.val[j];
            if (px.needs_grad)
                for (int j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i) acc += double(g[i]) * pw.val[size_t(i) * k + j];
                    px.grad[j] += real(acc);
                }
        };
    return Var(n);
}

static Var conv2d_impl(const Var& input, const Var& kernel, const Var* bias, int stride, int pad) {
    const Shape& xs = input.shape();
    const Shape& ks = kernel.shape();
    if (xs.size() != 3 || ks.size() != 4 || ks[1] != xs[0])
        throw std::runtime_error("conv2d: shape mismatch input=" + shape_str(xs) +
                                 " kernel=" + shape_str(ks));
    if (stride < 1) throw std::runtime_error("conv2d: stride must be >= 1");
    int C = xs[0], H = xs[1], W = xs[2];
    int F = ks[0], kh = ks[2], kw = ks[3];
    int oh = (H + 2 * pad - kh) / stride + 1;
    int ow = (W + 2 * pad - kw) / stride + 1;
    if (oh < 1 || ow < 1) throw std::runtime_error("conv2d: kernel larger than padded input");

    std::vector<NodePtr> parents = {input.node(), kernel.node()};
    if (bias) {
        if (bias->shape() != Shape{F})
            throw std::runtime_error("conv2d: bias shape " + shape_str(bias->shape()) +
                                     " does not match " + std::to_string(F) + " filters");
        parents.push_back(bias->node());
    }
    auto n = make_node({F, oh, ow}, std::move(parents));

    const real* xv = input.value().data();
    const real* kv = kernel.value().data();
    real* ov = n->val.data();

    // valid output range for one kernel offset: 0 <= o*stride - pad + k < N
    auto out_range = [stride, pad](int k, int in_n, int out_n, int& o0, int& o1) {
        o0 = std::max(0, (pad - k + stride - 1) / stride);
        o1 = std::min(out_n - 1, (in_n - 1 - k + pad) / stride);
    };

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int f = 0; f < F; ++f) {
        real* of = ov + size_t(f) * oh * ow;
        real b = bias ? bias->value()[f] : real(0);
        for (int i = 0; i < oh * ow; ++i) of[i] = b;
        for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    real kval = kv[((size_t(f) * C + c) * kh + ky) * kw + kx];
                    if (kval == real(0)) continue;
                    int oy0, oy1, ox0, ox1;
                    out_range(ky, H, oh, oy0, oy1);
                    out_range(kx, W, ow, ox0, ox1);
                    int off = kx - pad;
                    for (int oy = oy0; oy <= oy1; ++oy) {
                        real* __restrict__ orow = of + size_t(oy) * ow;
                        const real* __restrict__ xrow =
                            xv + (size_t(c) * H + oy * stride - pad + ky) * W;
                        for (int ox = ox0; ox <= ox1; ++ox)
                            orow[ox] += kval * xrow[ox * stride + off];
                    }
                }
    }

    bool has_bias = bias != nullptr;
    if (n->needs_grad)
        n->backprop = [C, H, W, F, kh, kw, oh, ow, stride, pad, has_bias](Node& self) {
            Node& px = *self.parents[0];
            Node& pk = *self.parents[1];
            const real* go = self.grad.data();
            const real* xv = px.val.data();
            const real* kv = pk.val.data();
            if (has_bias && self.parents[2]->needs_grad) {
                Node& pb = *self.parents[2];
                for (int f = 0; f < F; ++f) {
                    double acc = 0.0;
                    const real* gf = go + size_t(f) * oh * ow;
                    for (int i = 0; i < oh * ow; ++i) acc += gf[i];
                    pb.grad[f] += real(acc);
                }
            }
            auto out_range = [stride, pad](int k, int in_n, int out_n, int& o0, int& o1) {
                o0 = std::max(0, (pad - k + stride - 1) / stride);
                o1 = std::min(out_n - 1, (in_n - 1 - k + pad) / stride);
            };
            if (pk.needs_grad) {
                real* gk = pk.grad.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
                for (int f = 0; f < F; ++f)
                    for (int c = 0; c < C; ++c)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                int oy0, oy1, ox0, ox1;
                                out_range(ky, H, oh, oy0, oy1);
                                out_range(kx, W, ow, ox0, ox1);
                                int off = kx - pad;
                                double acc = 0.0;
                                for (int oy = oy0; oy <= oy1; ++oy) {
                                    const real* __restrict__ gf = go + (size_t(f) * oh + oy) * ow;
                                    const real* __restrict__ xrow =
                                        xv + (size_t(c) * H + oy * stride - pad + ky) * W;
                                    for (int ox = ox0; ox <= ox1; ++ox)
                                        acc += double(gf[ox]) * xrow[ox * stride + off];
                                }
                                gk[((size_t(f) * C + c) * kh + ky) * kw + kx] += real(acc);
                            }
            }
            if (px.needs_grad) {
                real* gx = px.grad.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
                for (int c = 0; c < C; ++c)
                    for (int f = 0; f < F; ++f)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                real kval = kv[((size_t(f) * C + c) * kh + ky) * kw + kx];
                                if (kval == real(0)) continue;
                                int oy0, oy1, ox0, ox1;
                                out_range(ky, H, oh, oy0, oy1);
                                out_range(kx, W, ow, ox0, ox1);
                                int off = kx - pad;
                                for (int oy = oy0; oy <= oy1; ++oy) {
                                    const real* __restrict__ gf = go + (size_t(f) * oh + oy) * ow;
                                    real* __restrict__ xrow =
                                        gx + (size_t(c) * H + oy * stride - pad + ky) * W;
                                    for (int ox = ox0; ox <= ox1; ++ox)
                                        xrow[ox * stride + off] += kval * gf[ox];
                                }
                            }
            }
        };
    return Var(n);
}

Var conv2d(const Var& input, const Var& kernel, const Var& bias, int stride, int pad) {
    return conv2d_impl(input, kernel, &bias, stride, pad);
}

Var conv2d(const Var& input, const Var& kernel, int stride, int pad) {
    return conv2d_impl(input, kernel, nullptr, stride, pad);
}

Var sum(const Var& x) {
    auto n = make_node({1}, {x.node()});
    double acc = 0.0;
    for (real v : x.value()) acc += v;
    n->val[0] = real(acc);
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < p.count(); ++i) p.grad[i] += self.grad[0];
        };
    return Var(n);
}

Var add_n(const std::vector<Var>& xs) {
    if (xs.empty()) return Var::scalar(0.0f);
    std::vector<NodePtr> parents;
    double acc = 0.0;
    for (const Var& v : xs) {
        if (v.count() != 1) throw std::runtime_error("add_n: non-scalar term " + shape_str(v.shape()));
        parents.push_back(v.node());
        acc += v.value()[0];
    }
    auto n = make_node({1}, std::move(parents));
    n->val[0] = real(acc);
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            for (auto& p : self.parents)
                if (p->needs_grad) p->grad[0] += self.grad[0];
        };
    return Var(n);
}

Var slice1d(const Var& x, int offset, int len) {
    if (x.shape().size() != 1 || offset < 0 || offset + len > x.shape()[0])
        throw std::runtime_error("slice1d: bad range [" + std::to_string(offset) + "," +
                                 std::to_string(offset + len) + ") of " + shape_str(x.shape()));
    auto n = make_node({len}, {x.node()});
    for (int i = 0; i < len; ++i) n->val[i] = x.value()[offset + i];
    if (n->needs_grad)
        n->backprop = [offset, len](Node& self) {
            Node& p = *self.parents[0];
            for (int i = 0; i < len; ++i) p.grad[offset + i] += self.grad[i];
        };
    return Var(n);
}

Var concat1d(const std::vector<Var>& xs) {
    std::vector<NodePtr> parents;
    int total = 0;
    for (const Var& v : xs) {
        total += int(v.count());
        parents.push_back(v.node());
    }
    auto n = make_node({total}, std::move(parents));
    size_t pos = 0;
    for (const Var& v : xs)
        for (real f : v.value()) n->val[pos++] = f;
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            size_t pos = 0;
            for (auto& p : self.parents) {
                if (p->needs_grad)
                    for (size_t i = 0; i < p->count(); ++i) p->grad[i] += self.grad[pos + i];
                pos += p->count();
            }
        };
    return Var(n);
}

Var flatten(const Var& x) {
    auto n = make_node({int(x.count())}, {x.node()});
    n->val = x.value();
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < p.count(); ++i) p.grad[i] += self.grad[i];
        };
    return Var(n);
}

Var pick(const Var& x, int flat_index) {
    if (flat_index < 0 || size_t(flat_index) >= x.count())
        throw std::runtime_error("pick: index " + std::to_string(flat_index) + " out of " +
                                 shape_str(x.shape()));
    auto n = make_node({1}, {x.node()});
    n->val[0] = x.value()[flat_index];
    if (n->needs_grad)
        n->backprop = [flat_index](Node& self) {
            self.parents[0]->grad[flat_index] += self.grad[0];
        };
    return Var(n);
}

Var ax_plus_b(const Var& x, real a, real b) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->count(); ++i) n->val[i] = a * x.value()[i] + b;
    if (n->needs_grad)
        n->backprop = [a](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < self.count(); ++i) p.grad[i] += self.grad[i] * a;
        };
    return Var(n);
}

Var scaled_exp(const Var& x, real s, real clamp_abs) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->count(); ++i)
        n->val[i] = s * std::exp(std::clamp(x.value()[i], -clamp_abs, clamp_abs));
    if (n->needs_grad)
        n->backprop = [clamp_abs](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < self.count(); ++i) {
                if (std::abs(p.val[i]) >= clamp_abs) continue;  // saturated
                p.grad[i] += self.grad[i] * self.val[i];
            }
        };
    return Var(n);
}

Var bce_logits_sum(const Var& x, const std::vector<real>& targets,
                   const std::vector<real>& weights) {
    if (x.count() != targets.size() || x.count() != weights.size())
        throw std::runtime_error("bce_logits_sum: size mismatch");
    auto n = make_node({1}, {x.node()});
    double acc = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        double v = x.value()[i];
        double softplus = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
        acc += weights[i] * (softplus - targets[i] * v);
    }
    n->val[0] = real(acc);
    if (n->needs_grad) {
        auto t = targets;
        auto w = weights;
        n->backprop = [t, w](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < t.size(); ++i) {
                real sig = 1.0f / (1.0f + std::exp(-p.val[i]));
                p.grad[i] += self.grad[0] * w[i] * (sig - t[i]);
            }
        };
    }
    return Var(n);
}

Var smooth_l1_sum(const Var& a, const std::vector<real>& target) {
    if (a.count() != target.size())
        throw std::runtime_error("smooth_l1_sum: size mismatch");
    auto n = make_node({1}, {a.node()});
    double acc = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        double d = double(a.value()[i]) - target[i];
        double ad = std::abs(d);
        acc += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
    }
    n->val[0] = real(acc);
    if (n->needs_grad) {
        auto tgt = target;
        n->backprop = [tgt](Node& self) {
            Node& p = *self.parents[0];
            for (size_t i = 0; i < tgt.size(); ++i) {
                real d = p.val[i] - tgt[i];
                real g = std::abs(d) < 1.0f ? d : (d > 0.0f ? 1.0f : -1.0f);
                p.grad[i] += self.grad[0] * g;
            }
        };
    }
    return Var(n);
}

Var l1_diff_sum(const Var& a, const Var& b) {
    check_same_shape(a, b, "l1_diff_sum");
    auto n = make_node({1}, {a.node(), b.node()});
    double acc = 0.0;
    for (size_t i = 0; i < a.count(); ++i) acc += std::abs(double(a.value()[i]) - b.value()[i]);
    n->val[0] = real(acc);
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            for (size_t i = 0; i < pa.count(); ++i) {
                real d = pa.val[i] - pb.val[i];
                real s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
                if (pa.needs_grad) pa.grad[i] += self.grad[0] * s;
                if (pb.needs_grad) pb.grad[i] -= self.grad[0] * s;
            }
        };
    return Var(n);
}

Var l2_distance(const Var& a, const Var& b) {
    check_same_shape(a, b, "l2_distance");
    auto n = make_node({1}, {a.node(), b.node()});
    double acc = 1e-12;
    for (size_t i = 0; i < a.count(); ++i) {
        double d = double(a.value()[i]) - b.value()[i];
        acc += d * d;
    }
    n->val[0] = real(std::sqrt(acc));
    if (n->needs_grad)
        n->backprop = [](Node& self) {
            Node& pa = *self.parents[0];
            Node& pb = *self.parents[1];
            real inv = self.grad[0] / std::max(self.val[0], real(1e-6));
            for (size_t i = 0; i < pa.count(); ++i) {
                real d = (pa.val[i] - pb.val[i]) * inv;
                if (pa.needs_grad) pa.grad[i] += d;
                if (pb.needs_grad) pb.grad[i] -= d;
            }
        };
    return Var(n);
}

Var clamp_max(const Var& x, real cap) {
    if (x.count() != 1) throw std::runtime_error("clamp_max: scalar expected");
    auto n = make_node({1}, {x.node()});
    n->val[0] = std::min(x.value()[0], cap);
    if (n->needs_grad)
        n->backprop = [cap](Node& self) {
            Node& p = *self.parents[0];
            if (p.val[0] < cap) p.grad[0] += self.grad[0];
        };
    return Var(n);
}

Var softmax_cross_entropy(const Var& logits, int target, real weight) {
    if (logits.shape().size() != 1 || target < 0 || target >= logits.shape()[0])
        throw std::runtime_error("softmax_cross_entropy: target " + std::to_string(target) +
                                 " out of range for " + shape_str(logits.shape()));
    int c = logits.shape()[0];
    auto n = make_node({1}, {logits.node()});
    const real* lv = logits.value().data();
    real mx = *std::max_element(lv, lv + c);
    double denom = 0.0;
    for (int i = 0; i < c; ++i) denom += std::exp(double(lv[i]) - mx);
    double log_z = std::log(denom) + mx;
    n->val[0] = real(weight * (log_z - lv[target]));
    if (n->needs_grad)
        n->backprop = [target, weight, c, log_z](Node& self) {
            Node& p = *self.parents[0];
            for (int i = 0; i < c; ++i) {
                real smx = real(std::exp(double(p.val[i]) - log_z));
                real onehot = i == target ? 1.0f : 0.0f;
                p.grad[i] += self.grad[0] * weight * (smx - onehot);
            }
        };
    return Var(n);
}

Var roi_pool(const Var& feat, real cx, real cy, real w, real h, int out_h, int out_w) {
    const Shape& fs = feat.shape();
    if (fs.size() != 3) throw std::runtime_error("roi_pool: feature map must be [C,H,W]");
    int C = fs[0], H = fs[1], W = fs[2];
    auto n = make_node({C, out_h, out_w}, {feat.node()});

    // Sample centers of an out_h x out_w grid spanning the box; clamped
    // bilinear lookup so boxes poking past the border stay defined.
    struct Tap {
        int i00, i01, i10, i11;
        real w00, w01, w10, w11;
    };
    std::vector<Tap> taps(size_t(out_h) * out_w);
    real x0 = cx - 0.5f * w, y0 = cy - 0.5f * h;
    for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
            real sx = x0 + (ox + 0.5f) * w / out_w - 0.5f;
            real sy = y0 + (oy + 0.5f) * h / out_h - 0.5f;
            sx = std::clamp(sx, real(0), real(W - 1));
            sy = std::clamp(sy, real(0), real(H - 1));
            int ix = std::min(int(sx), W - 2 >= 0 ? W - 2 : 0);
            int iy = std::min(int(sy), H - 2 >= 0 ? H - 2 : 0);
            real fx = sx - ix, fy = sy - iy;
            Tap t;
            t.i00 = iy * W + ix;
            t.i01 = iy * W + std::min(ix + 1, W - 1);
            t.i10 = std::min(iy + 1, H - 1) * W + ix;
            t.i11 = std::min(iy + 1, H - 1) * W + std::min(ix + 1, W - 1);
            t.w00 = (1 - fx) * (1 - fy);
            t.w01 = fx * (1 - fy);
            t.w10 = (1 - fx) * fy;
            t.w11 = fx * fy;
            taps[size_t(oy) * out_w + ox] = t;
        }

    for (int c = 0; c < C; ++c) {
        const real* fp = feat.value().data() + size_t(c) * H * W;
        real* op = n->val.data() + size_t(c) * out_h * out_w;
        for (size_t i = 0; i < taps.size(); ++i) {
            const Tap& t = taps[i];
            op[i] = t.w00 * fp[t.i00] + t.w01 * fp[t.i01] + t.w10 * fp[t.i10] + t.w11 * fp[t.i11];
        }
    }
    if (n->needs_grad)
        n->backprop = [taps, C, H, W, out_h, out_w](Node& self) {
            Node& p = *self.parents[0];
            for (int c = 0; c < C; ++c) {
                real* gp = p.grad.data() + size_t(c) * H * W;
                const real* go = self.grad.data() + size_t(c) * out_h * out_w;
                for (size_t i = 0; i < taps.size(); ++i) {
                    const Tap& t = taps[i];
                    gp[t.i00] += go[i] * t.w00;
                    gp[t.i01] += go[i] * t.w01;
                    gp[t.i10] += go[i] * t.w10;
                    gp[t.i11] += go[i] * t.w11;
                }
            }
        };
    return Var(n);
}

std::vector<real> softmax_values(const std::vector<real>& logits) {
    std::vector<real> out(logits.size());
    real mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) denom += std::exp(double(logits[i]) - mx);
    for (size_t i = 0; i < logits.size(); ++i)
        out[i] = real(std::exp(double(logits[i]) - mx) / denom);
    return out;
}

int argmax(const std::vector<real>& v) {
    return int(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace rfpose::ad
