#include <cmath>

#include "doctest.h"
#include "rfpose/ad/adam.hpp"
#include "rfpose/ad/lstm.hpp"
#include "rfpose/ad/ops.hpp"
#include "support/gradcheck.hpp"

using namespace rfpose;
using ad::Var;
using testsupport::gradcheck_max_rel_err;
using testsupport::random_vector;
using testsupport::weighted_sum_loss;

namespace {
constexpr double kOpTol = 1e-4;
}

TEST_CASE("affine forward basics") {
    // identity weight, zero bias
    Var W = Var::param({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Var x = Var::constant({3}, {0.5, -1.0, 2.0});
    Var b = Var::param({3}, {0, 0, 0});
    Var y = ad::affine(W, x, b);
    CHECK(y.value()[0] == doctest::Approx(0.5));
    CHECK(y.value()[1] == doctest::Approx(-1.0));
    CHECK(y.value()[2] == doctest::Approx(2.0));

    // scalar hand case: w=2, p=3, b=1 -> 7, d/dw = 3
    Var w1 = Var::param({1, 1}, {2.0});
    Var p1 = Var::constant({1}, {3.0});
    Var b1 = Var::param({1}, {1.0});
    Var out = ad::affine(w1, p1, b1);
    CHECK(out.item() == doctest::Approx(7.0));
    ad::Tape tape = ad::Tape::build(out);
    tape.backward();
    CHECK(w1.grad()[0] == doctest::Approx(3.0));
    CHECK(b1.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("affine gradient vs finite differences") {
    for (auto act : {ad::Act::Identity, ad::Act::Tanh, ad::Act::Sigmoid}) {
        Var W = Var::param({4, 6}, random_vector(24, 11, 1.2));
        Var x = Var::param({6}, random_vector(6, 12, 1.0));
        Var b = Var::param({4}, random_vector(4, 13, 0.5));
        auto loss = weighted_sum_loss([&]() { return ad::affine(W, x, b, act); }, 14);
        CHECK(gradcheck_max_rel_err({W, x, b}, loss) < kOpTol);
    }
}

TEST_CASE("affine shape mismatch names both shapes") {
    Var W = Var::param({2, 3}, random_vector(6, 1));
    Var x = Var::constant({4}, random_vector(4, 2));
    Var b = Var::param({2}, {0, 0});
    CHECK_THROWS_WITH_AS(ad::affine(W, x, b), doctest::Contains("[2x3]"), std::runtime_error);
}

TEST_CASE("conv2d identity and counting kernels") {
    // 1x1 identity kernel reproduces the input
    Var x = Var::constant({1, 4, 4}, random_vector(16, 3));
    Var k = Var::param({1, 1, 1, 1}, {1.0});
    Var y = ad::conv2d(x, k, 1, 0);
    for (size_t i = 0; i < 16; ++i) CHECK(y.value()[i] == doctest::Approx(x.value()[i]));

    // 3x3 ones kernel over a 5x5 ones input, valid padding: every output 9
    Var ones = Var::constant({1, 5, 5}, std::vector<ad::real>(25, 1.0));
    Var k9 = Var::param({1, 1, 3, 3}, std::vector<ad::real>(9, 1.0));
    Var y9 = ad::conv2d(ones, k9, 1, 0);
    CHECK(y9.shape() == ad::Shape{1, 3, 3});
    for (float v : y9.value()) CHECK(v == doctest::Approx(9.0));
}

TEST_CASE("conv2d gradient vs finite differences") {
    struct Case {
        int stride, pad;
    };
    for (auto [stride, pad] : {Case{1, 1}, Case{2, 1}, Case{1, 0}}) {
        Var x = Var::param({2, 6, 6}, random_vector(72, 21, 1.0));
        Var k = Var::param({3, 2, 3, 3}, random_vector(54, 22, 0.8));
        Var b = Var::param({3}, random_vector(3, 23, 0.3));
        auto loss = weighted_sum_loss([&, s = stride, p = pad]() { return ad::conv2d(x, k, b, s, p); }, 24);
        CHECK(gradcheck_max_rel_err({x, k, b}, loss) < kOpTol);
    }
}

TEST_CASE("lstm_step zero parameters give zero output from zero state") {
    int H = 4, X = 3;
    ad::LstmParams p;
    p.input_dim = X;
    p.hidden_dim = H;
    p.w_x = Var::param({4 * H, X}, std::vector<ad::real>(size_t(4) * H * X, 0.0));
    p.w_h = Var::param({4 * H, H}, std::vector<ad::real>(size_t(4) * H * H, 0.0));
    p.bias = Var::param({4 * H}, std::vector<ad::real>(size_t(4) * H, 0.0));
    auto st = ad::lstm_zero_state(H);
    Var x = Var::constant({X}, {3.0, -2.0, 0.7});
    auto next = ad::lstm_step(st, x, p);
    for (float v : next.h.value()) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("lstm_step saturated gates preserve the cell") {
    int H = 3, X = 2;
    ad::LstmParams p;
    p.input_dim = X;
    p.hidden_dim = H;
    p.w_x = Var::param({4 * H, X}, std::vector<ad::real>(size_t(4) * H * X, 0.0));
    p.w_h = Var::param({4 * H, H}, std::vector<ad::real>(size_t(4) * H * H, 0.0));
    std::vector<ad::real> bias(size_t(4) * H, 0.0);
    for (int i = 0; i < H; ++i) bias[i] = -20.0;          // input gate shut
    for (int i = H; i < 2 * H; ++i) bias[i] = 20.0;       // forget gate open
    p.bias = Var::param({4 * H}, bias);
    ad::LstmState st{Var::constant({H}, {0.3, -0.5, 0.9}),
                     Var::constant({H}, {0.4, -0.2, 0.8})};
    Var x = Var::constant({X}, {1.0, -1.0});
    auto next = ad::lstm_step(st, x, p);
    for (int i = 0; i < H; ++i)
        CHECK(std::abs(next.c.value()[i] - st.c.value()[i]) < 1e-6);
}

TEST_CASE("lstm chained three steps gradient vs finite differences") {
    int H = 3, X = 2;
    ad::LstmParams p;
    p.input_dim = X;
    p.hidden_dim = H;
    p.w_x = Var::param({4 * H, X}, random_vector(size_t(4) * H * X, 31, 0.7));
    p.w_h = Var::param({4 * H, H}, random_vector(size_t(4) * H * H, 32, 0.7));
    p.bias = Var::param({4 * H}, random_vector(size_t(4) * H, 33, 0.3));
    std::vector<Var> inputs = {Var::constant({X}, random_vector(X, 34)),
                               Var::constant({X}, random_vector(X, 35)),
                               Var::constant({X}, random_vector(X, 36))};
    auto forward = [&]() {
        auto st = ad::lstm_zero_state(H);
        for (const Var& x : inputs) st = ad::lstm_step(st, x, p);
        return st.h;
    };
    auto loss = weighted_sum_loss(forward, 37);
    CHECK(gradcheck_max_rel_err({p.w_x, p.w_h, p.bias}, loss) < kOpTol);
}

TEST_CASE("softmax cross entropy values and gradient") {
    // uniform logits over C classes -> weight * log C
    int C = 7;
    Var logits = Var::param({C}, std::vector<ad::real>(C, 0.42));
    Var l = ad::softmax_cross_entropy(logits, 3, 2.0);
    CHECK(l.item() == doctest::Approx(2.0 * std::log(double(C))).epsilon(1e-6));

    // dominant logit at the target saturates to ~zero loss
    std::vector<ad::real> spiky(C, 0.0);
    spiky[2] = 50.0;
    Var l2 = ad::softmax_cross_entropy(Var::param({C}, spiky), 2, 1.0);
    CHECK(l2.item() < 1e-6);

    // softmax normalizes
    auto probs = ad::softmax_values(testsupport::random_vector(9, 41));
    double sum = 0.0;
    for (float p : probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    Var lg = Var::param({5}, random_vector(5, 42, 2.0));
    auto loss = [&]() { return ad::softmax_cross_entropy(lg, 1, 1.7); };
    CHECK(gradcheck_max_rel_err({lg}, loss) < kOpTol);
}

TEST_CASE("elementwise and reduction op gradients") {
    Var a = Var::param({6}, random_vector(6, 51, 1.0));
    Var b = Var::param({6}, random_vector(6, 52, 1.0));
    auto mul_loss = weighted_sum_loss([&]() { return ad::mul(a, b); }, 53);
    CHECK(gradcheck_max_rel_err({a, b}, mul_loss) < kOpTol);

    auto relu_loss = weighted_sum_loss([&]() { return ad::relu(a); }, 54);
    CHECK(gradcheck_max_rel_err({a}, relu_loss) < kOpTol);

    auto norm_loss = [&]() { return ad::l2_distance(a, b); };
    CHECK(gradcheck_max_rel_err({a, b}, norm_loss) < kOpTol);

    auto smooth_loss = [&]() { return ad::smooth_l1_sum(a, {0.2, 2.4, -0.3, 0.6, -1.9, 0.05}); };
    CHECK(gradcheck_max_rel_err({a}, smooth_loss) < kOpTol);

    auto bce_loss = [&]() {
        return ad::bce_logits_sum(a, {1, 0, 0, 1, 0, 1}, {1.0, 0.5, 0.5, 2.0, 0.5, 1.0});
    };
    CHECK(gradcheck_max_rel_err({a}, bce_loss) < kOpTol);

    Var f = Var::param({2, 5, 5}, random_vector(50, 55, 1.0));
    auto roi_loss = weighted_sum_loss([&]() { return ad::roi_pool(f, 2.2, 2.7, 3.1, 2.4, 4, 4); }, 56);
    CHECK(gradcheck_max_rel_err({f}, roi_loss) < kOpTol);
}

TEST_CASE("backward determinism: identical tape, identical gradients") {
    Var W = Var::param({8, 8}, random_vector(64, 61, 1.0));
    Var x = Var::constant({8}, random_vector(8, 62, 1.0));
    Var b = Var::param({8}, random_vector(8, 63, 0.2));
    auto run = [&]() {
        Var y = ad::affine(W, x, b, ad::Act::Tanh);
        Var l = ad::sum(ad::mul(y, y));
        ad::Tape t = ad::Tape::build(l);
        t.backward();
        return W.grad();
    };
    auto g1 = run();
    auto g2 = run();
    CHECK(std::equal(g1.begin(), g1.end(), g2.begin()));
}

TEST_CASE("tape visits each node exactly once (diamond reuse)") {
    Var x = Var::param({3}, {1.0, 2.0, 3.0});
    Var y = ad::ax_plus_b(x, 2.0, 0.0);
    Var z = ad::add(y, y);  // y feeds twice
    Var l = ad::sum(z);
    ad::Tape t = ad::Tape::build(l);
    t.backward();
    // d/dx sum(2*(2x)) = 4
    for (float g : x.grad()) CHECK(g == doctest::Approx(4.0));
    CHECK(t.size() == 4);  // x, y, z, l
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    ad::Adam adam(3, {});
    std::vector<ad::real> params = {1.0, -2.0, 0.5};
    auto orig = params;
    adam.step(params, {0.0, 0.0, 0.0});
    CHECK(params == orig);
}

TEST_CASE("adam first step moves by ~lr against the gradient sign") {
    ad::AdamConfig cfg;
    cfg.lr = 1e-3;
    ad::Adam adam(2, cfg);
    std::vector<ad::real> params = {1.0, 1.0};
    adam.step(params, {0.5, -2.0});
    // bias correction cancels at t=1: update = -lr * g / (|g| + eps')
    CHECK(params[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-4));
    CHECK(params[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-4));
}

TEST_CASE("adam drives a quadratic bowl to the bottom") {
    ad::AdamConfig cfg;
    cfg.lr = 1e-2;
    ad::Adam adam(1, cfg);
    std::vector<ad::real> x = {1.0};
    for (int t = 0; t < 500; ++t) adam.step(x, {2.0 * x[0]});
    CHECK(std::abs(x[0]) < 1e-2);
}

TEST_CASE("adam rejects non-finite gradients") {
    ad::Adam adam(1, {});
    std::vector<ad::real> params = {1.0};
    CHECK_THROWS_AS(adam.step(params, {std::nanf("")}), std::runtime_error);
}
