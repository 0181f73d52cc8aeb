#include "rfpose/ad/lstm.hpp"

namespace rfpose::ad {

LstmState lstm_zero_state(int hidden_dim) {
    return {Var::zeros({hidden_dim}), Var::zeros({hidden_dim})};
}

LstmState lstm_step(const LstmState& state, const Var& x, const LstmParams& p) {
    int H = p.hidden_dim;
    if (x.shape() != Shape{p.input_dim} || state.h.shape() != Shape{H})
        throw std::runtime_error("lstm_step: dimension mismatch x=" + shape_str(x.shape()) +
                                 " h=" + shape_str(state.h.shape()));
    Var gates = add(add(matvec(p.w_x, x), matvec(p.w_h, state.h)), p.bias);
    Var i = sigmoid(slice1d(gates, 0, H));
    Var f = sigmoid(slice1d(gates, H, H));
    Var g = tanh_(slice1d(gates, 2 * H, H));
    Var o = sigmoid(slice1d(gates, 3 * H, H));
    Var c_next = add(mul(f, state.c), mul(i, g));
    Var h_next = mul(o, tanh_(c_next));
    return {h_next, c_next};
}

}  // namespace rfpose::ad
