#pragma once

#include <array>
#include <string>
#include <vector>

#include "rfpose/camera.hpp"
#include "rfpose/prep.hpp"

#include "json.hpp"

namespace rfpose {

// Scene -> heatmap sensing front end shared by generation, evaluation and
// rendering.
struct Frontend {
    RadarConfig radar;
    CartesianGrid grid;
    PinholeCamera camera;
    MotionParams motion;
    int label_window = 12;
    double confidence_floor = 0.3;
    double label_decay = 0.8;

    void validate() const;
    HeatmapPair frame_heatmaps(const SceneFrame& frame, uint64_t noise_seed) const;
    std::vector<GroundTruthPose> sequence_labels(const std::vector<SceneFrame>& frames) const;
    // Keypoint bounding box (cx, cy, w, h) in vertical-heatmap pixels.
    std::array<double, 4> person_box(const Skeleton& sk) const;
    // Continuous vertical-map pixel of a 3D point (col, row).
    std::pair<double, double> vert_pixel(const Vec3& p) const;
};

struct CategorySpec {
    std::string name;       // "no_person", "walking", ...
    MotionKind kind = MotionKind::walking;
    int persons = 1;
    bool occluded = false;
    double weight = 1.0;    // relative share of the dataset
};

// Per-category shares matching the shipped dataset design: walking dominates,
// multi-person uses two subjects, no-person scenes are adversarial clutter.
std::vector<CategorySpec> default_categories();

struct DatasetSpec {
    int total = 100;
    std::vector<CategorySpec> categories = default_categories();
    std::vector<Material> media = {Material::wood, Material::brick, Material::drywall,
                                   Material::plastic, Material::paper_board};
    double thickness = 0.04;  // m, obstruction panels
    double fps = 8.0;
    double duration_s = 3.0;

    void validate() const;
};

struct SequenceMeta {
    int id = 0;
    std::string name;
    std::string category;
    MotionKind kind = MotionKind::none;
    int persons = 0;
    bool occluded = false;
    Material material = Material::air;
    double thickness = 0.0;
    std::string split;  // train / val / test
    int frames = 0;
    double fps = 8.0;
    uint64_t motion_seed = 0;
};

struct Manifest {
    uint64_t seed = 0;
    std::vector<SequenceMeta> sequences;
    nlohmann::json config_echo;
    std::string root;

    std::vector<SequenceMeta> split(const std::string& name) const;
};

// Truth records stored alongside each sequence.
struct TruthPerson {
    int identity = 0;
    std::array<double, 4> box{};  // cx, cy, w, h in vertical-heatmap pixels
    std::array<LabeledKeypoint, kKeypointCount> keypoints;
};

struct TruthFrame {
    double time = 0.0;
    std::vector<TruthPerson> persons;
};

// Largest-remainder apportionment of `total` into the given weights.
std::vector<int> apportion(int total, const std::vector<double>& weights);

// Generates, senses and persists a dataset under out_dir:
//   manifest.json, seq_XXXX/frame_XXXX.rft ([2,H,W] f32), seq_XXXX/labels.json
// Deterministic in (spec, frontend, seed); refuses totals below 20.
Manifest make_dataset(const DatasetSpec& spec, const Frontend& frontend, uint64_t seed,
                      const std::string& out_dir,
                      const nlohmann::json& config_echo = nlohmann::json::object());

Manifest load_manifest(const std::string& dataset_dir);

struct LoadedSequence {
    SequenceMeta meta;
    std::vector<std::vector<float>> frames;  // [2*H*W] each
    std::vector<TruthFrame> labels;
    int heat_h = 0, heat_w = 0;
};

LoadedSequence load_sequence(const Manifest& manifest, const SequenceMeta& meta);
std::vector<TruthFrame> load_labels(const std::string& path);

}  // namespace rfpose
