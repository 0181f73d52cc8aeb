#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfpose/checkpoint.hpp"
#include "rfpose/dataset.hpp"
#include "rfpose/decoder.hpp"

#include "json.hpp"

namespace rfpose {

struct EvalConfig {
    // Per-keypoint falloff constants; torso keypoints are tolerant, hands and
    // feet strict. Overridable.
    std::array<double, kNumKeypoints> k_i{0.042, 0.13, 0.13, 0.12, 0.12, 0.10, 0.10, 0.17,
                                          0.17,  0.14, 0.14, 0.14, 0.14, 0.13, 0.17};
    std::vector<double> thresholds{0.50, 0.75};

    void validate() const;
};

// Keypoint similarity: exp(-d^2 / (2 s^2 k^2)).
double ks(double dx, double dy, double s, double k_i);

// Confidence-gated mean of KS over keypoints; empty when no keypoint has
// positive confidence (counted as a miss by aggregates).
std::optional<double> oks(const std::array<PoseKeypoint, kNumKeypoints>& pred,
                          const std::array<LabeledKeypoint, kNumKeypoints>& truth, double s,
                          const EvalConfig& cfg);

// One evaluated ground-truth keypoint.
struct KpResult {
    std::string sequence;
    std::string category;
    Material material = Material::air;
    bool occluded = false;
    int frame = 0;
    int identity = 0;
    int keypoint = 0;
    bool predicted = false;  // false => unmatched truth person (a miss)
    double ks_value = 0.0;
    double confidence = 0.0;
};

// Scores a predicted stream against truth; unmatched truth persons contribute
// all-miss keypoints. Prediction/truth matching is greedy box IoU.
std::vector<KpResult> evaluate_sequence(const std::vector<FramePoses>& pred,
                                        const std::vector<TruthFrame>& truth,
                                        const SequenceMeta& meta, const EvalConfig& cfg,
                                        double iou_match = 0.3);

enum class GroupBy { keypoint, person, medium, visibility };

// Fraction of keypoints with KS >= threshold per group; misses count against.
std::map<std::string, double> average_accuracy(const std::vector<KpResult>& results,
                                               double threshold, GroupBy group);
double overall_aa(const std::vector<KpResult>& results, double threshold);
// fraction with no qualifying prediction or KS below the medium threshold
double missed_rate(const std::vector<KpResult>& results, double threshold = 0.5);

struct ErrorBands {
    double high = 0.0;    // KS < 0.5 or missed
    double medium = 0.0;  // [0.5, 0.75)
    double low = 0.0;     // >= 0.75
};
ErrorBands error_bands(const std::vector<KpResult>& results);

struct TimingStats {
    double mean_s = 0.0;
    double p95_s = 0.0;
    int frames = 0;
};

struct RunSuiteOptions {
    EvalConfig eval;
    std::vector<Material> media;      // media to re-simulate the test split under
    double medium_thickness = 0.04;
    bool oracle_as_model = false;     // pipe ground truth through as predictions
    InferMode mode = InferMode::many_to_many;
    std::optional<std::string> ablation_checkpoint;  // framewise model for comparison
    int max_sequences = 0;            // 0 = all test sequences
};

struct EvalReport {
    // condition ("visible", "medium:wood", ...) -> keypoint group -> threshold -> AA
    std::map<std::string, std::map<std::string, std::map<std::string, double>>> aa;
    std::map<std::string, double> overall_aa50;
    std::map<std::string, double> overall_aa75;
    ErrorBands bands;
    std::vector<int> oks_histogram;  // 10 bins over [0,1]
    TimingStats timing;
    std::map<std::string, double> ablation;  // aa50/missed rate per mode
    std::vector<std::string> notes;

    nlohmann::json to_json(bool with_timing = true) const;
    std::string to_csv() const;  // Table-3 style keypoint x condition layout
};

// Re-simulates the test split under each requested medium (matched motion
// seeds), decodes with the checkpointed model and aggregates the report.
EvalReport run_suite(const Checkpoint& ck, const Manifest& dataset, const Frontend& frontend,
                     const RunSuiteOptions& opts);

}  // namespace rfpose
