#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rfpose/geometry.hpp"

namespace rfpose {

// BODY-15 keypoint order. Left/right pairs are from the subject's view.
// The named body positions cover 13 points; neck and mid-hip complete the 15.
enum Keypoint : int {
    kHead = 0,
    kShoulderL,
    kShoulderR,
    kElbowL,
    kElbowR,
    kHandL,
    kHandR,
    kHipL,
    kHipR,
    kKneeL,
    kKneeR,
    kFootL,
    kFootR,
    kNeck,
    kMidHip,
    kKeypointCount  // 15
};

const char* keypoint_name(int k);

// Canonical body-part group for per-type reporting (merges left/right).
const char* keypoint_group(int k);

// Adjacent-keypoint pairs whose distances are rigid over a sequence.
const std::vector<std::pair<int, int>>& skeleton_bones();

struct KeypointPatch {
    Vec3 position;  // meters, device at origin, +z boresight, +y up
    Vec3 normal;    // unit outward surface normal
    double area = 0.0;  // m^2 reflector-patch proxy
};

struct Skeleton {
    std::array<KeypointPatch, kKeypointCount> keypoints;
    int identity = 0;
};

enum class Material {
    air,
    wood,
    brick,
    drywall,
    concrete,
    plastic,
    paper_board,
    insulation,
    linoleum,
    carpet,
    fog,
    leaves
};

const std::vector<Material>& all_materials();
std::string material_name(Material m);
Material material_from_string(const std::string& s);

struct MediumSpec {
    Material material = Material::air;
    double thickness = 0.0;  // meters
};

// Static planar reflector; populates no-person scenes with human-scale
// RF signatures.
struct Reflector {
    Vec3 position;
    Vec3 normal;
    double area = 0.0;
};

struct SceneFrame {
    double time = 0.0;
    std::vector<Skeleton> persons;
    std::vector<Reflector> clutter;
    MediumSpec medium;
    Box3 room;
};

enum class MotionKind { walking, gesturing, sitting, none };

std::string motion_kind_name(MotionKind k);
MotionKind motion_kind_from_string(const std::string& s);

struct MotionParams {
    Box3 room{{-1.2, -1.0, 1.6}, {1.2, 0.95, 4.0}};
    MediumSpec medium;
    double v_max = 2.5;    // m/s per-keypoint speed cap
    double walk_speed = 0.6;
    double cadence_hz = 0.75;
};

// Deterministic multi-person motion. kind==none or persons==0 yields
// adversarial no-person frames carrying only static clutter.
std::vector<SceneFrame> generate_motion(MotionKind kind, int persons, double duration_s,
                                        double fps, uint64_t seed,
                                        const MotionParams& params = {});

}  // namespace rfpose
