#pragma once

#include "rfpose/ad/ops.hpp"

namespace rfpose::ad {

// Gate parameters packed as rows [i; f; g; o], each block `hidden` tall.
struct LstmParams {
    Var w_x;   // [4H x X]
    Var w_h;   // [4H x H]
    Var bias;  // [4H]
    int input_dim = 0;
    int hidden_dim = 0;
};

struct LstmState {
    Var h, c;
};

LstmState lstm_zero_state(int hidden_dim);

// One step of the standard LSTM recurrence. Gradients flow through time when
// the returned state feeds the next call on the same tape.
LstmState lstm_step(const LstmState& state, const Var& x, const LstmParams& p);

}  // namespace rfpose::ad
