#pragma once

#include <cstdint>
#include <vector>

#include "rfpose/ad/graph.hpp"

namespace rfpose::ad {

struct AdamConfig {
    real lr = 1e-3;
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
};

// Bias-corrected Adam over one flat parameter vector. Moment buffers are
// owned here so they can be checkpointed alongside the parameters.
class Adam {
public:
    Adam() = default;
    Adam(size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0f), v_(n, 0.0f) {}

    // Throws on non-finite gradients (training halts rather than diverging
    // silently); `t` starts at 1.
    void step(std::vector<real>& params, const std::vector<real>& grads);

    int64_t t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    std::vector<real>& m() { return m_; }
    std::vector<real>& v() { return v_; }
    void restore(int64_t t, std::vector<real> m, std::vector<real> v);

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<real> m_, v_;
};

}  // namespace rfpose::ad
