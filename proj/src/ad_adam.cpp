#include "rfpose/ad/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfpose::ad {

void Adam::step(std::vector<real>& params, const std::vector<real>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::runtime_error("adam: parameter/gradient size mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(double(cfg_.beta1), double(t_));
    double bc2 = 1.0 - std::pow(double(cfg_.beta2), double(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        real g = grads[i];
        if (!std::isfinite(g))
            throw std::runtime_error("adam: non-finite gradient at index " + std::to_string(i) +
                                     " (step " + std::to_string(t_) + ")");
        m_[i] = cfg_.beta1 * m_[i] + (1.0f - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0f - cfg_.beta2) * g * g;
        double mh = m_[i] / bc1;
        double vh = v_[i] / bc2;
        params[i] -= real(cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
    }
}

void Adam::restore(int64_t t, std::vector<real> m, std::vector<real> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw std::runtime_error("adam: restored moment size mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace rfpose::ad
