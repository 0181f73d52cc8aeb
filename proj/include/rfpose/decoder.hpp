#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rfpose/ad/adam.hpp"
#include "rfpose/ad/lstm.hpp"
#include "rfpose/ad/ops.hpp"

namespace rfpose {

constexpr int kRoiSize = 21;
constexpr int kSigmaDim = kRoiSize * kRoiSize;  // 441
constexpr int kDetectionDim = 4 + kSigmaDim;    // 445
constexpr int kNumKeypoints = 15;

struct ModelConfig {
    int heat_h = 64, heat_w = 64;
    int base_channels = 6;
    int num_blocks = 8;  // residual blocks, split across two stages (stride 4 total)
    int p_max = 3;
    int classes_x = 64, classes_y = 64;
    int lstm_hidden = 96;
    int key_dim = 48;
    int window = 12;
    float lambda_track = 0.75f;
    float objectness_threshold = 0.5f;
    float anchor_w = 18.0f, anchor_h = 34.0f;  // heatmap pixels
    float track_margin = 5.0f;
    float delta_cap = 2.5f;       // cap on the exponential weight pixel distance
    float iou_match = 0.3f;
    float obj_pos_weight = 5.0f;  // objectness balance, training only
    float obj_neg_weight = 0.05f;

    int feat_stride() const { return 4; }
    int feat_h() const { return heat_h / feat_stride(); }
    int feat_w() const { return heat_w / feat_stride(); }
    int feat_channels() const { return 2 * base_channels; }
    void validate() const;
};

// One proposed person: box descriptors plus the flattened 21x21 ROI feature.
struct Detection {
    std::array<float, 4> box{};          // cx, cy, w, h in heatmap pixels
    std::array<float, kSigmaDim> sigma{};
    float objectness = 0.0f;
};

struct PoseKeypoint {
    int alpha = 0;
    int beta = 0;
    float confidence = 0.0f;  // from softmax max-probability
};

struct PosePerson {
    int identity = 0;
    std::array<float, 4> box{};
    float objectness = 0.0f;
    std::array<PoseKeypoint, kNumKeypoints> keypoints;
};

struct FramePoses {
    double time = 0.0;
    std::vector<PosePerson> persons;
};

enum class InferMode { many_to_many, frame_by_frame };
std::string infer_mode_name(InferMode m);
InferMode infer_mode_from_string(const std::string& s);

class PoseModel {
public:
    PoseModel(const ModelConfig& cfg, uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }

    // named parameters in registry order (stable across save/load)
    const std::vector<std::pair<std::string, ad::Var>>& params() const { return params_; }
    ad::Var param(const std::string& name) const;
    size_t scalar_count() const;
    std::vector<ad::real> flat_values() const;
    void set_flat_values(const std::vector<ad::real>& v);
    void accumulate_flat_grads(std::vector<ad::real>& acc) const;

    // Residual backbone over the 2-channel heatmap pair; spatial stride 4.
    ad::Var backbone_forward(const ad::Var& maps) const;
    // Raw RPN head output [5, fh, fw]: (objectness, tx, ty, tw, th) per cell.
    ad::Var rpn_raw(const ad::Var& features) const;
    // Single-channel identity-embedding map the ROI features pool from.
    ad::Var embed_map(const ad::Var& features) const;

    // Box decode at one feature cell; returns a graph node [4] in heatmap px.
    ad::Var decode_box(const ad::Var& rpn_flat, int cell_y, int cell_x) const;
    ad::Var objectness_logits(const ad::Var& rpn_flat) const;  // [fh*fw]
    ad::Var sigma_from_box(const ad::Var& embed, const std::array<float, 4>& box_px) const;

    struct Proposals {
        std::vector<Detection> detections;    // kept, sorted by objectness
        std::vector<float> matrix;            // p_max x 445, zero-padded rows
    };
    Proposals propose_regions(const ad::Var& features) const;

    // Eq-9/10 style heads: one affine per keypoint, one shared pair of
    // classifier weights for all keypoints.
    struct KeypointLogits {
        ad::Var alpha, beta;
    };
    std::vector<KeypointLogits> keypoint_heads(const ad::Var& person_repr) const;

    const ad::LstmParams& lstm() const { return lstm_; }
    // Frame-by-frame replacement for the LSTM: a tanh affine on the detection row.
    ad::Var framewise_repr(const ad::Var& detection_row) const;
    ad::Var lstm_input(const ad::Var& detection_row) const;  // normalized copy

private:
    ModelConfig cfg_;
    std::vector<std::pair<std::string, ad::Var>> params_;
    ad::LstmParams lstm_;

    ad::Var register_param(const std::string& name, ad::Shape shape, ad::Var v);
};

// --- losses ---------------------------------------------------------------

// Localization + 0.2 * continuity over a window of matched boxes.
// pred[t][p] aligns with truth[t][p]; continuity pairs person p across
// consecutive frames when present in both.
ad::Var rpn_loss(const std::vector<std::vector<ad::Var>>& pred,
                 const std::vector<std::vector<std::array<float, 4>>>& truth);

// Identity-contrastive loss over ROI features of consecutive frames.
// Same identity pulls together, different identities push apart up to the
// margin clamp.
ad::Var track_loss(const std::vector<std::vector<ad::Var>>& sigmas,
                   const std::vector<std::vector<int>>& identities, float margin);

// Exponential classification weight n * e^(delta - ln 2); delta is the pixel
// distance between current argmax and truth, treated as a constant.
double cls_weight(double n, double delta);

struct KeypointTruth {
    int alpha = 0, beta = 0;
    double confidence = 1.0;
};

// Weighted cross-entropy over both coordinate heads of every keypoint.
ad::Var cls_loss(const std::vector<PoseModel::KeypointLogits>& logits,
                 const std::array<KeypointTruth, kNumKeypoints>& truth, float delta_cap);

ad::Var joint_loss(const ad::Var& l_rpn, const ad::Var& l_track, const ad::Var& l_cls,
                   float lambda);

// --- matching --------------------------------------------------------------

double box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b);

// Greedy maximum-IoU assignment (pred index, truth index); pairs below the
// threshold are dropped; ties resolve to the lowest index.
std::vector<std::pair<int, int>> match_detections(const std::vector<std::array<float, 4>>& pred,
                                                  const std::vector<std::array<float, 4>>& truth,
                                                  double iou_threshold = 0.3);

// --- inference ---------------------------------------------------------------

// Decodes a stream of heatmap frames (each 2*H*W floats) into per-frame pose
// estimates. many_to_many threads LSTM state across frames with sigma-feature
// identity tracking; frame_by_frame resets all temporal state every frame.
std::vector<FramePoses> infer_sequence(const PoseModel& model,
                                       const std::vector<std::vector<float>>& heatmap_frames,
                                       const std::vector<double>& timestamps, InferMode mode,
                                       std::vector<double>* frame_seconds = nullptr);

}  // namespace rfpose
