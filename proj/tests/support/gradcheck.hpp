#pragma once

// Central finite-difference oracle for gradient checks. Kept in test code so
// it stays independent of the backward implementations it verifies.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rfpose/ad/graph.hpp"
#include "rfpose/ad/ops.hpp"
#include "rfpose/rng.hpp"

namespace testsupport {

// Maximum vector-relative error over all parameter tensors:
//   max_i |analytic_i - fd_i| / max(linf(analytic), linf(fd), 1e-8)
// computed per tensor. `build` must rebuild the scalar loss graph from the
// parameters' current values.
inline double gradcheck_max_rel_err(const std::vector<rfpose::ad::Var>& params,
                                    const std::function<rfpose::ad::Var()>& build,
                                    double h = 1e-3) {
    using rfpose::ad::Tape;
    using rfpose::ad::Var;

    Var loss = build();
    Tape tape = Tape::build(loss);
    tape.backward();
    std::vector<std::vector<rfpose::ad::real>> analytic;
    for (const Var& p : params) analytic.push_back(p.node()->grad);

    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Var p = params[pi];
        std::vector<double> fd(p.count());
        for (size_t i = 0; i < p.count(); ++i) {
            rfpose::ad::real orig = p.value()[i];
            p.value()[i] = orig + h;
            double lp = build().item();
            p.value()[i] = orig - h;
            double lm = build().item();
            p.value()[i] = orig;
            fd[i] = (lp - lm) / (2.0 * h);
        }
        double linf = 1e-8;
        for (size_t i = 0; i < p.count(); ++i)
            linf = std::max({linf, std::abs(double(analytic[pi][i])), std::abs(fd[i])});
        for (size_t i = 0; i < p.count(); ++i)
            worst = std::max(worst, std::abs(double(analytic[pi][i]) - fd[i]) / linf);
    }
    return worst;
}

// random scalar loss over an op output: sum_i c_i * y_i with fixed coefs
inline std::function<rfpose::ad::Var()> weighted_sum_loss(
    const std::function<rfpose::ad::Var()>& forward, uint64_t seed) {
    using rfpose::ad::Var;
    auto coefs = std::make_shared<std::vector<rfpose::ad::real>>();
    return [forward, coefs, seed]() {
        Var y = forward();
        if (coefs->empty()) {
            rfpose::Rng rng(rfpose::Rng::derive(seed, 0xc0ef));
            coefs->resize(y.count());
            for (rfpose::ad::real& c : *coefs)
                c = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        }
        Var c = Var::constant(y.shape(), *coefs);
        return rfpose::ad::sum(rfpose::ad::mul(y, c));
    };
}

inline std::vector<rfpose::ad::real> random_vector(size_t n, uint64_t seed, double scale = 1.0) {
    rfpose::Rng rng(rfpose::Rng::derive(seed, 0xf111));
    std::vector<rfpose::ad::real> out(n);
    for (rfpose::ad::real& v : out) v = rng.uniform(-scale, scale);
    return out;
}

}  // namespace testsupport
