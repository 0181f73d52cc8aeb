#include "rfpose/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"

namespace rfpose {

using ad::Var;

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_windows < 1) throw ConfigError("train: batch size must be >= 1");
    if (window < 1) throw ConfigError("train: window must be >= 1");
    if (window_stride < 1) throw ConfigError("train: window stride must be >= 1");
    if (!(adam.lr >= 0.0f)) throw ConfigError("train: learning rate must be >= 0");
    eval.validate();
}

std::string TrainReport::to_csv(bool with_seconds) const {
    std::string out = with_seconds ? "epoch,l_rpn,l_track,l_cls,val_aa50,seconds\n"
                                   : "epoch,l_rpn,l_track,l_cls,val_aa50\n";
    char buf[160];
    for (const EpochStats& e : epochs) {
        if (with_seconds)
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.3f\n", e.epoch, e.l_rpn,
                          e.l_track, e.l_cls, e.val_aa50, e.seconds);
        else
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.l_rpn,
                          e.l_track, e.l_cls, e.val_aa50);
        out += buf;
    }
    return out;
}

namespace {

struct WindowRef {
    int seq = 0;
    int start = 0;
};

// truth persons of one frame sorted by identity; identity order is the
// stable slot order for LSTM threading and continuity pairing
std::vector<const TruthPerson*> frame_truths(const TruthFrame& tf) {
    std::vector<const TruthPerson*> out;
    for (const TruthPerson& p : tf.persons) out.push_back(&p);
    std::sort(out.begin(), out.end(),
              [](const TruthPerson* a, const TruthPerson* b) { return a->identity < b->identity; });
    return out;
}

double aa50_of_sequences(const PoseModel& model, const std::vector<LoadedSequence>& seqs,
                         const EvalConfig& eval_cfg, InferMode mode, size_t limit = 0) {
    std::vector<KpResult> all;
    size_t n = limit ? std::min(limit, seqs.size()) : seqs.size();
    for (size_t i = 0; i < n; ++i) {
        const LoadedSequence& s = seqs[i];
        std::vector<double> times;
        for (const TruthFrame& tf : s.labels) times.push_back(tf.time);
        auto poses = infer_sequence(model, s.frames, times, mode);
        auto res = evaluate_sequence(poses, s.labels, s.meta, eval_cfg);
        all.insert(all.end(), res.begin(), res.end());
    }
    return all.empty() ? 0.0 : overall_aa(all, 0.50);
}

}  // namespace

WindowLoss window_loss(const PoseModel& model, const LoadedSequence& seq, int start, int window,
                       bool framewise) {
    const ModelConfig& cfg = model.config();
    int fh = cfg.feat_h(), fw = cfg.feat_w();
    int stride = cfg.feat_stride();

    std::vector<std::vector<Var>> pred_boxes(window), sigmas(window);
    std::vector<std::vector<std::array<float, 4>>> truth_boxes(window);
    std::vector<std::vector<int>> identities(window);
    std::vector<Var> obj_terms, cls_terms;
    std::map<int, ad::LstmState> states;  // per identity, threaded over the window

    for (int t = 0; t < window; ++t) {
        const std::vector<float>& heat = seq.frames[start + t];
        Var maps = Var::constant({2, cfg.heat_h, cfg.heat_w},
                                 std::vector<ad::real>(heat.begin(), heat.end()));
        Var features = model.backbone_forward(maps);
        Var rpn_flat = ad::flatten(model.rpn_raw(features));
        Var emb = model.embed_map(features);

        auto truths = frame_truths(seq.labels[start + t]);

        // objectness supervision over every cell; the anchor at the truth box
        // center is the responsible positive
        std::vector<ad::real> targets(size_t(fh) * fw, 0.0);
        std::vector<ad::real> weights(size_t(fh) * fw, cfg.obj_neg_weight);
        for (const TruthPerson* tp : truths) {
            int cj = std::clamp(int(tp->box[0]) / stride, 0, fw - 1);
            int ci = std::clamp(int(tp->box[1]) / stride, 0, fh - 1);
            targets[size_t(ci) * fw + cj] = 1.0f;
            weights[size_t(ci) * fw + cj] = cfg.obj_pos_weight;
        }
        obj_terms.push_back(
            ad::bce_logits_sum(model.objectness_logits(rpn_flat), targets, weights));

        for (const TruthPerson* tp : truths) {
            int cj = std::clamp(int(tp->box[0]) / stride, 0, fw - 1);
            int ci = std::clamp(int(tp->box[1]) / stride, 0, fh - 1);
            Var box = model.decode_box(rpn_flat, ci, cj);
            std::array<float, 4> box_px;
            for (int i = 0; i < 4; ++i) box_px[i] = box.value()[i];
            Var sigma = model.sigma_from_box(emb, box_px);

            pred_boxes[t].push_back(box);
            truth_boxes[t].push_back({float(tp->box[0]), float(tp->box[1]), float(tp->box[2]),
                                      float(tp->box[3])});
            sigmas[t].push_back(sigma);
            identities[t].push_back(tp->identity);

            Var row = ad::concat1d({box, sigma});
            Var repr;
            if (framewise) {
                repr = model.framewise_repr(row);
            } else {
                auto [it, fresh] = states.try_emplace(tp->identity);
                if (fresh) it->second = ad::lstm_zero_state(cfg.lstm_hidden);
                it->second = ad::lstm_step(it->second, model.lstm_input(row), model.lstm());
                repr = it->second.h;
            }

            auto heads = model.keypoint_heads(repr);
            std::array<KeypointTruth, kNumKeypoints> kt;
            for (int k = 0; k < kNumKeypoints; ++k)
                kt[k] = {tp->keypoints[k].alpha, tp->keypoints[k].beta,
                         tp->keypoints[k].confidence};
            cls_terms.push_back(cls_loss(heads, kt, cfg.delta_cap));
        }
    }

    WindowLoss out;
    Var box_part = rpn_loss(pred_boxes, truth_boxes);
    out.l_rpn = ad::add(box_part, ad::add_n(obj_terms));
    bool any_pair = false;
    for (int t = 1; t < window; ++t)
        if (!sigmas[t].empty() && !sigmas[t - 1].empty()) any_pair = true;
    out.l_track = any_pair ? track_loss(sigmas, identities, cfg.track_margin) : Var::scalar(0.0f);
    out.l_cls = ad::add_n(cls_terms);
    out.joint = joint_loss(out.l_rpn, out.l_track, out.l_cls, cfg.lambda_track);
    return out;
}

namespace {

TrainOutput train_impl(const Manifest& dataset, PoseModel& model, const TrainConfig& cfg,
                       bool framewise, const std::string& mode_name) {
    cfg.validate();
    auto train_metas = dataset.split("train");
    auto val_metas = dataset.split("val");
    if (train_metas.empty()) throw ConfigError("train: dataset has no train split");

    std::vector<LoadedSequence> train_seqs, val_seqs;
    for (const SequenceMeta& m : train_metas) train_seqs.push_back(load_sequence(dataset, m));
    for (const SequenceMeta& m : val_metas) val_seqs.push_back(load_sequence(dataset, m));

    std::vector<WindowRef> windows;
    for (size_t s = 0; s < train_seqs.size(); ++s) {
        int frames = int(train_seqs[s].frames.size());
        for (int start = 0; start + cfg.window <= frames; start += cfg.window_stride)
            windows.push_back({int(s), start});
        if (frames >= cfg.window && (frames - cfg.window) % cfg.window_stride)
            windows.push_back({int(s), frames - cfg.window});  // tail window
    }
    if (windows.empty()) throw ConfigError("train: no full windows; shorten the window");

    std::vector<ad::real> flat = model.flat_values();
    ad::Adam adam(flat.size(), cfg.adam);
    InferMode mode = framewise ? InferMode::frame_by_frame : InferMode::many_to_many;

    TrainOutput out;
    double best_val = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng(Rng::derive(cfg.seed, 0xe90c + uint64_t(epoch)));
        std::vector<WindowRef> order = windows;
        shuffle_rng.shuffle(order);

        double sum_rpn = 0.0, sum_track = 0.0, sum_cls = 0.0;
        int batches = 0;
        for (size_t w0 = 0; w0 < order.size(); w0 += cfg.batch_windows, ++batches) {
            size_t w1 = std::min(order.size(), w0 + cfg.batch_windows);
            float inv = 1.0f / float(w1 - w0);
            std::vector<ad::real> grads(flat.size(), 0.0);
            for (size_t w = w0; w < w1; ++w) {
                const WindowRef& ref = order[w];
                WindowLoss wl =
                    window_loss(model, train_seqs[ref.seq], ref.start, cfg.window, framewise);
                Var scaled = ad::scale(wl.joint, inv);
                ad::Tape tape = ad::Tape::build(scaled);
                tape.backward();
                model.accumulate_flat_grads(grads);
                sum_rpn += wl.l_rpn.item() * inv;
                sum_track += wl.l_track.item() * inv;
                sum_cls += wl.l_cls.item() * inv;
                if (!std::isfinite(wl.joint.item()))
                    throw std::runtime_error("train: non-finite loss in epoch " +
                                             std::to_string(epoch) + " batch " +
                                             std::to_string(batches));
            }
            if (cfg.adam.lr > 0.0f) {
                adam.step(flat, grads);
                model.set_flat_values(flat);
            }
        }

        EpochStats st;
        st.epoch = epoch;
        st.l_rpn = sum_rpn / std::max(1, batches);
        st.l_track = sum_track / std::max(1, batches);
        st.l_cls = sum_cls / std::max(1, batches);
        st.val_aa50 = val_seqs.empty() ? 0.0
                                       : aa50_of_sequences(model, val_seqs, cfg.eval, mode);
        st.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.report.epochs.push_back(st);
        if (cfg.on_epoch) cfg.on_epoch(st);

        if (st.val_aa50 >= best_val) {
            best_val = st.val_aa50;
            out.report.best_epoch = epoch;
            out.report.best_val_aa50 = st.val_aa50;
            out.best.model_config = model.config();
            out.best.default_mode = mode_name;
            out.best.params = narrow_f32(model.flat_values());
        }
        if (cfg.early_stop_train_aa > 0.0 && epoch % cfg.early_check_every == 0) {
            double train_aa = aa50_of_sequences(model, train_seqs, cfg.eval, mode, 8);
            if (train_aa >= cfg.early_stop_train_aa) break;
        }
    }

    out.final_ckpt.model_config = model.config();
    out.final_ckpt.default_mode = mode_name;
    out.final_ckpt.params = narrow_f32(model.flat_values());
    out.final_ckpt.has_adam = true;
    out.final_ckpt.adam_config = cfg.adam;
    out.final_ckpt.adam_t = adam.t();
    out.final_ckpt.adam_m = narrow_f32(adam.m());
    out.final_ckpt.adam_v = narrow_f32(adam.v());
    if (out.best.params.empty()) out.best = out.final_ckpt;
    return out;
}

}  // namespace

TrainOutput train(const Manifest& dataset, const ModelConfig& model_cfg, const TrainConfig& cfg) {
    PoseModel model(model_cfg, Rng::derive(cfg.seed, 0x1217));
    return train_impl(dataset, model, cfg, false, "many2many");
}

TrainOutput finetune_frame_by_frame(const Checkpoint& base, const Manifest& dataset,
                                    TrainConfig cfg) {
    cfg.window = 1;
    cfg.window_stride = 1;
    auto model = model_from_checkpoint(base);
    return train_impl(dataset, *model, cfg, true, "framewise");
}

}  // namespace rfpose
