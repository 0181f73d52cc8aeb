#include <cmath>

#include "doctest.h"
#include "rfpose/decoder.hpp"
#include "rfpose/rng.hpp"
#include "support/gradcheck.hpp"

using namespace rfpose;
using ad::Var;

namespace {

ModelConfig mini_config() {
    ModelConfig cfg;
    cfg.heat_h = cfg.heat_w = 32;
    cfg.base_channels = 3;
    cfg.num_blocks = 2;
    cfg.p_max = 2;
    cfg.classes_x = cfg.classes_y = 16;
    cfg.lstm_hidden = 8;
    cfg.key_dim = 6;
    cfg.window = 3;
    return cfg;
}

Var random_maps(const ModelConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    std::vector<ad::real> data(size_t(2) * cfg.heat_h * cfg.heat_w);
    for (ad::real& v : data) v = rng.uniform(0.0, 1.0);
    return Var::constant({2, cfg.heat_h, cfg.heat_w}, data);
}

void zero_param(PoseModel& model, const std::string& name) {
    Var p = model.param(name);
    std::fill(p.value().begin(), p.value().end(), 0.0);
}

}  // namespace

TEST_CASE("backbone: zero input with zero biases gives zero features") {
    ModelConfig cfg = mini_config();
    PoseModel model(cfg, 5);
    Var zero = Var::constant({2, cfg.heat_h, cfg.heat_w},
                             std::vector<ad::real>(size_t(2) * cfg.heat_h * cfg.heat_w, 0.0));
    Var f = model.backbone_forward(zero);
    for (float v : f.value()) CHECK(v == 0.0);
}

TEST_CASE("backbone: zeroed residual branches collapse to the projected input") {
    ModelConfig cfg = mini_config();  // block0 plain, block1 strided projection
    PoseModel model(cfg, 6);
    for (int b = 0; b < cfg.num_blocks; ++b) {
        std::string p = "block" + std::to_string(b);
        zero_param(model, p + ".k1");
        zero_param(model, p + ".b1");
        zero_param(model, p + ".k2");
        zero_param(model, p + ".b2");
    }
    Var maps = random_maps(cfg, 17);
    Var features = model.backbone_forward(maps);
    // expected: proj(relu(stem(maps))) since every branch contributes zero
    Var stem = ad::relu(ad::conv2d(maps, model.param("stem.k"), model.param("stem.b"), 2, 1));
    Var expected =
        ad::conv2d(stem, model.param("block1.proj_k"), model.param("block1.proj_b"), 2, 0);
    REQUIRE(features.count() == expected.count());
    for (size_t i = 0; i < features.count(); ++i)
        CHECK(features.value()[i] == doctest::Approx(expected.value()[i]).epsilon(1e-6));
}

TEST_CASE("backbone output shape is stride-4 with doubled channels") {
    ModelConfig cfg;
    cfg.base_channels = 4;
    cfg.num_blocks = 4;
    PoseModel model(cfg, 2);
    Var maps = random_maps(cfg, 3);
    Var f = model.backbone_forward(maps);
    CHECK(f.shape() == ad::Shape{8, 16, 16});

    CHECK_THROWS(model.backbone_forward(Var::constant({2, 8, 8}, std::vector<ad::real>(128, 0.0))));
}

TEST_CASE("propose_regions: matrix is always p_max x 445") {
    ModelConfig cfg = mini_config();
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        PoseModel model(cfg, seed);
        auto proposals = model.propose_regions(model.backbone_forward(random_maps(cfg, seed)));
        CHECK(proposals.matrix.size() == size_t(cfg.p_max) * kDetectionDim);
        CHECK(int(proposals.detections.size()) <= cfg.p_max);
        for (const Detection& d : proposals.detections) {
            CHECK(d.box[2] > 0.0);
            CHECK(d.box[3] > 0.0);
            CHECK(d.objectness >= cfg.objectness_threshold);
        }
    }

    // objectness forced far below threshold: zero detections, all-zero rows
    PoseModel model(cfg, 4);
    Var rpn_b = model.param("rpn.b");
    rpn_b.value()[0] = -10.0;
    auto proposals = model.propose_regions(model.backbone_forward(random_maps(cfg, 9)));
    CHECK(proposals.detections.empty());
    for (float v : proposals.matrix) CHECK(v == 0.0);
}

TEST_CASE("keypoint heads share exactly one classifier pair") {
    ModelConfig cfg = mini_config();
    PoseModel model(cfg, 11);
    int n_kp_w = 0, n_alpha = 0, n_beta = 0;
    for (const auto& [name, v] : model.params()) {
        if (name.rfind("kp", 0) == 0 && name.find(".w") != std::string::npos) ++n_kp_w;
        if (name.rfind("head_alpha", 0) == 0) ++n_alpha;
        if (name.rfind("head_beta", 0) == 0) ++n_beta;
    }
    CHECK(n_kp_w == 15);
    CHECK(n_alpha == 2);  // weight + bias
    CHECK(n_beta == 2);

    // zero weights and a bias spike at class j pin every keypoint to j
    for (int k = 0; k < kNumKeypoints; ++k) {
        zero_param(model, "kp" + std::to_string(k) + ".w");
        zero_param(model, "kp" + std::to_string(k) + ".b");
    }
    zero_param(model, "head_alpha.w");
    zero_param(model, "head_beta.w");
    zero_param(model, "head_alpha.b");
    zero_param(model, "head_beta.b");
    int j = 11;
    model.param("head_alpha.b").value()[j] = 5.0;
    model.param("head_beta.b").value()[3] = 5.0;
    Var repr = Var::constant({cfg.lstm_hidden}, testsupport::random_vector(cfg.lstm_hidden, 1));
    auto heads = model.keypoint_heads(repr);
    for (const auto& h : heads) {
        CHECK(ad::argmax(h.alpha.value()) == j);
        CHECK(ad::argmax(h.beta.value()) == 3);
    }

    // argmax maps through a permutation of the logits
    std::vector<ad::real> logits = testsupport::random_vector(8, 21);
    int base = ad::argmax(logits);
    std::vector<ad::real> rotated(8);
    for (int i = 0; i < 8; ++i) rotated[(i + 3) % 8] = logits[i];
    CHECK(ad::argmax(rotated) == (base + 3) % 8);
}

TEST_CASE("rpn_loss matches the two-frame hand case exactly") {
    std::array<float, 4> truth{10.0, 12.0, 6.0, 14.0};
    std::vector<std::vector<std::array<float, 4>>> truths = {{truth}, {truth}};

    // perfect, static boxes: zero loss
    auto box = [](std::array<float, 4> b) { return Var::constant({4}, {b[0], b[1], b[2], b[3]}); };
    CHECK(rpn_loss({{box(truth)}, {box(truth)}}, truths).item() == doctest::Approx(0.0));

    // frame 2 off by one pixel in cx: smoothL1(1) = 0.5 plus 0.2 * L1 drift
    std::array<float, 4> off = truth;
    off[0] += 1.0;
    Var loss = rpn_loss({{box(truth)}, {box(off)}}, truths);
    CHECK(loss.item() == doctest::Approx(0.7).epsilon(1e-6));

    // single frame window: continuity term vanishes
    Var single = rpn_loss({{box(off)}}, {{truth}});
    CHECK(single.item() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(single.item() >= 0.0);
}

TEST_CASE("track_loss: pull, push, and the margin clamp") {
    auto sig = [](float fill) {
        return Var::constant({kSigmaDim}, std::vector<ad::real>(kSigmaDim, fill));
    };
    // identical features for the same identity: zero cost
    Var same = track_loss({{sig(0.5)}, {sig(0.5)}}, {{0}, {0}}, 5.0);
    CHECK(same.item() == doctest::Approx(0.0).epsilon(1e-5));

    // single person: only nonnegative pull terms
    Var pull = track_loss({{sig(0.0)}, {sig(0.2)}}, {{0}, {0}}, 5.0);
    CHECK(pull.item() >= 0.0);
    CHECK(pull.item() == doctest::Approx(0.2 * std::sqrt(double(kSigmaDim))).epsilon(1e-4));

    // two people farther apart than the margin: exactly -margin per pair
    Var push = track_loss({{sig(0.0)}, {sig(10.0)}}, {{0}, {1}}, 5.0);
    CHECK(push.item() == doctest::Approx(-5.0).epsilon(1e-6));
}

TEST_CASE("cls_weight values and monotonicity") {
    double ln2 = std::log(2.0);
    CHECK(cls_weight(1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cls_weight(0.6, 0.0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(cls_weight(0.8, ln2) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(cls_weight(1.0, ln2 + 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    double prev = 0.0;
    for (double d = 0.0; d < 6.0; d += 0.25) {
        double w = cls_weight(0.7, d);
        CHECK(w > prev);
        prev = w;
    }
}

TEST_CASE("joint_loss combination and gradient additivity") {
    CHECK(joint_loss(Var::scalar(1), Var::scalar(1), Var::scalar(1), 0.75).item() ==
          doctest::Approx(2.75));
    CHECK(joint_loss(Var::scalar(0), Var::scalar(0), Var::scalar(0), 0.75).item() ==
          doctest::Approx(0.0));

    // d(joint)/dp equals grad(rpn) + lambda grad(track) + grad(cls)
    Var p = Var::param({4}, testsupport::random_vector(4, 31, 1.0));
    auto build_parts = [&]() {
        Var a = ad::sum(ad::mul(p, p));                      // "rpn"
        Var b = ad::sum(ad::tanh_(p));                       // "track"
        Var c = ad::smooth_l1_sum(p, {0.1, -0.4, 2.0, 0.3});  // "cls"
        return std::array<Var, 3>{a, b, c};
    };
    auto parts = build_parts();
    Var joint = joint_loss(parts[0], parts[1], parts[2], 0.75);
    ad::Tape t = ad::Tape::build(joint);
    t.backward();
    auto gj = p.grad();
    std::vector<ad::real> sum(4, 0.0);
    float lambdas[3] = {1.0, 0.75, 1.0};
    for (int i = 0; i < 3; ++i) {
        auto pi = build_parts();
        ad::Tape ti = ad::Tape::build(pi[i]);
        ti.backward();
        for (int k = 0; k < 4; ++k) sum[k] += lambdas[i] * p.grad()[k];
    }
    for (int k = 0; k < 4; ++k) CHECK(gj[k] == doctest::Approx(sum[k]).epsilon(1e-4));
}

TEST_CASE("match_detections basics") {
    std::array<float, 4> a{10, 10, 10, 10};
    // identical boxes: identity assignment
    auto pairs = match_detections({a, {30, 30, 8, 8}}, {a, {30, 30, 8, 8}});
    CHECK(pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

    // disjoint boxes: no matches
    CHECK(match_detections({a}, {{50, 50, 4, 4}}).empty());

    // crossed affinities resolve to the greedy-optimal diagonal
    std::vector<std::array<float, 4>> pred = {{10.0, 10, 10, 10}, {19.0, 10, 10, 10}};
    std::vector<std::array<float, 4>> truth = {{10.5, 10, 10, 10}, {19.5, 10, 10, 10}};
    CHECK(box_iou(pred[0], truth[0]) > box_iou(pred[0], truth[1]));
    auto cross = match_detections(pred, truth);
    CHECK(cross == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

    // brute force over both 2x2 assignments agrees
    double diag = box_iou(pred[0], truth[0]) + box_iou(pred[1], truth[1]);
    double anti = box_iou(pred[0], truth[1]) + box_iou(pred[1], truth[0]);
    CHECK(diag > anti);
}

TEST_CASE("infer_sequence: empty stream, determinism, framewise locality") {
    ModelConfig cfg = mini_config();
    PoseModel model(cfg, 77);
    CHECK(infer_sequence(model, {}, {}, InferMode::many_to_many).empty());

    Rng rng(88);
    std::vector<std::vector<float>> frames;
    std::vector<double> times;
    for (int f = 0; f < 4; ++f) {
        std::vector<float> m(size_t(2) * cfg.heat_h * cfg.heat_w);
        for (float& v : m) v = float(rng.uniform(0.0, 1.0));
        frames.push_back(std::move(m));
        times.push_back(f * 0.125);
    }
    auto run1 = infer_sequence(model, frames, times, InferMode::many_to_many);
    auto run2 = infer_sequence(model, frames, times, InferMode::many_to_many);
    REQUIRE(run1.size() == run2.size());
    for (size_t f = 0; f < run1.size(); ++f) {
        REQUIRE(run1[f].persons.size() == run2[f].persons.size());
        for (size_t p = 0; p < run1[f].persons.size(); ++p)
            for (int k = 0; k < kNumKeypoints; ++k) {
                CHECK(run1[f].persons[p].keypoints[k].alpha ==
                      run2[f].persons[p].keypoints[k].alpha);
                CHECK(run1[f].persons[p].keypoints[k].beta ==
                      run2[f].persons[p].keypoints[k].beta);
            }
    }

    // frame-by-frame output at t is invariant to every other frame
    auto fw_base = infer_sequence(model, frames, times, InferMode::frame_by_frame);
    auto perturbed = frames;
    for (float& v : perturbed[0]) v = 1.0 - v;
    for (float& v : perturbed[3]) v *= 0.5;
    auto fw_pert = infer_sequence(model, perturbed, times, InferMode::frame_by_frame);
    REQUIRE(fw_base.size() == fw_pert.size());
    for (int f : {1, 2}) {
        REQUIRE(fw_base[f].persons.size() == fw_pert[f].persons.size());
        for (size_t p = 0; p < fw_base[f].persons.size(); ++p)
            for (int k = 0; k < kNumKeypoints; ++k)
                CHECK(fw_base[f].persons[p].keypoints[k].alpha ==
                      fw_pert[f].persons[p].keypoints[k].alpha);
    }

    CHECK_THROWS(infer_sequence(model, frames, {0.0, 0.2, 0.1, 0.3}, InferMode::many_to_many));
}
