#pragma once

#include <vector>

#include "rfpose/radar.hpp"
#include "rfpose/scene.hpp"

namespace rfpose {

// Pinhole camera co-located with the array at the origin, looking along +z.
// Pixel classes: alpha = column in [0, width), beta = row in [0, height),
// row 0 at the top.
struct PinholeCamera {
    int width = 64, height = 64;
    double fx = 38.0, fy = 38.0;
    double cx = 31.5, cy = 31.5;

    // false if the point is behind the camera
    bool project(const Vec3& p, double& u, double& v) const;
    void validate_covers(const Box3& room) const;
};

struct LabeledKeypoint {
    int alpha = 0;            // pixel column class
    int beta = 0;             // pixel row class
    double confidence = 1.0;  // teacher confidence n in [0, 1]
    bool clamped = false;     // true if the projection left the image plane
};

struct PersonLabel {
    int identity = 0;
    std::array<LabeledKeypoint, kKeypointCount> keypoints;
};

struct GroundTruthPose {
    std::vector<PersonLabel> persons;
};

// Single-frame oracle label; confidence is 1.0 for keypoints currently
// specularly visible and confidence_floor otherwise.
GroundTruthPose oracle_labels(const SceneFrame& frame, const PinholeCamera& camera,
                              const RadarConfig& radar);

// Sequence oracle. Confidence is 1.0 when the keypoint was visible to the RF
// device in at least one of the last `window` frames and decays geometrically
// toward `confidence_floor` the longer it stays invisible.
struct LabelOracle {
    PinholeCamera camera;
    RadarConfig radar;
    int window = 12;
    double confidence_floor = 0.3;
    double decay = 0.8;

    std::vector<GroundTruthPose> label_sequence(const std::vector<SceneFrame>& frames) const;
};

}  // namespace rfpose
