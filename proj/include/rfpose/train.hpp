#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rfpose/checkpoint.hpp"
#include "rfpose/dataset.hpp"
#include "rfpose/decoder.hpp"
#include "rfpose/evaluate.hpp"

namespace rfpose {

struct EpochStats;

struct TrainConfig {
    int epochs = 80;
    int batch_windows = 4;       // windows per optimizer step
    int window = 12;             // W frames per training clip
    int window_stride = 6;
    ad::AdamConfig adam;
    uint64_t seed = 1;
    // stop early once training AA at KS50 reaches this (0 disables); checked
    // every `early_check_every` epochs on a subsample of train sequences
    double early_stop_train_aa = 0.0;
    int early_check_every = 5;
    EvalConfig eval;
    std::function<void(const EpochStats&)> on_epoch;  // progress hook

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double l_rpn = 0.0, l_track = 0.0, l_cls = 0.0;
    double val_aa50 = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_val_aa50 = 0.0;

    // columns: epoch,l_rpn,l_track,l_cls,val_aa50,seconds
    std::string to_csv(bool with_seconds = true) const;
};

struct TrainOutput {
    Checkpoint best;       // highest validation AA at KS50
    Checkpoint final_ckpt;
    TrainReport report;
};

// Window-batched joint-loss training with Adam; deterministic in
// (dataset, configs, seed). Halts on non-finite loss naming the batch.
TrainOutput train(const Manifest& dataset, const ModelConfig& model_cfg, const TrainConfig& cfg);

// Swaps the LSTM for the per-frame affine head and fine-tunes from the base
// checkpoint with W = 1; continuity and tracking terms vanish.
TrainOutput finetune_frame_by_frame(const Checkpoint& base, const Manifest& dataset,
                                    TrainConfig cfg);

// Training-path loss assembly for one window; exposed for gradient checks.
struct WindowLoss {
    ad::Var l_rpn;   // localization + continuity + objectness
    ad::Var l_track;
    ad::Var l_cls;
    ad::Var joint;
};
WindowLoss window_loss(const PoseModel& model, const LoadedSequence& seq, int start, int window,
                       bool framewise);

}  // namespace rfpose
