#include "rfpose/camera.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rfpose/errors.hpp"

namespace rfpose {

bool PinholeCamera::project(const Vec3& p, double& u, double& v) const {
    if (p.z <= 1e-6) return false;
    u = cx + fx * p.x / p.z;
    v = cy - fy * p.y / p.z;
    return true;
}

void PinholeCamera::validate_covers(const Box3& room) const {
    for (int corner = 0; corner < 8; ++corner) {
        Vec3 p{corner & 1 ? room.hi.x : room.lo.x, corner & 2 ? room.hi.y : room.lo.y,
               corner & 4 ? room.hi.z : room.lo.z};
        double u, v;
        if (!project(p, u, v) || u < -0.5 || u > width - 0.5 || v < -0.5 || v > height - 0.5)
            throw ConfigError("camera frustum does not cover the room corner (" +
                              std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                              std::to_string(p.z) + ")");
    }
}

namespace {

LabeledKeypoint project_keypoint(const KeypointPatch& kp, const PinholeCamera& cam) {
    LabeledKeypoint out;
    double u = 0.0, v = 0.0;
    bool ok = cam.project(kp.position, u, v);
    int a = ok ? int(std::lround(u)) : 0;
    int b = ok ? int(std::lround(v)) : 0;
    out.clamped = !ok || a < 0 || a >= cam.width || b < 0 || b >= cam.height;
    out.alpha = std::clamp(a, 0, cam.width - 1);
    out.beta = std::clamp(b, 0, cam.height - 1);
    return out;
}

}  // namespace

GroundTruthPose oracle_labels(const SceneFrame& frame, const PinholeCamera& camera,
                              const RadarConfig& radar) {
    GroundTruthPose gt;
    for (const Skeleton& sk : frame.persons) {
        PersonLabel pl;
        pl.identity = sk.identity;
        for (int k = 0; k < kKeypointCount; ++k) {
            pl.keypoints[k] = project_keypoint(sk.keypoints[k], camera);
            bool vis = patch_visible(sk.keypoints[k].position, sk.keypoints[k].normal, radar);
            pl.keypoints[k].confidence = vis ? 1.0 : 0.3;
        }
        gt.persons.push_back(std::move(pl));
    }
    return gt;
}

std::vector<GroundTruthPose> LabelOracle::label_sequence(
    const std::vector<SceneFrame>& frames) const {
    // last frame index at which (person, keypoint) was specularly visible
    std::map<int, std::array<int, kKeypointCount>> last_seen;
    std::vector<GroundTruthPose> out;
    out.reserve(frames.size());
    for (int f = 0; f < int(frames.size()); ++f) {
        const SceneFrame& frame = frames[f];
        GroundTruthPose gt;
        for (const Skeleton& sk : frame.persons) {
            auto [it, fresh] = last_seen.try_emplace(sk.identity);
            if (fresh) it->second.fill(-1);
            PersonLabel pl;
            pl.identity = sk.identity;
            for (int k = 0; k < kKeypointCount; ++k) {
                const KeypointPatch& kp = sk.keypoints[k];
                pl.keypoints[k] = project_keypoint(kp, camera);
                if (patch_visible(kp.position, kp.normal, radar)) it->second[k] = f;
                // gap counts frames since the last sighting; never-seen
                // keypoints decay from the start of the sequence
                int gap = f - it->second[k];
                double n = 1.0;
                if (gap > window)
                    n = std::max(confidence_floor, std::pow(decay, double(gap - window)));
                pl.keypoints[k].confidence = n;
            }
            gt.persons.push_back(std::move(pl));
        }
        out.push_back(std::move(gt));
    }
    return out;
}

}  // namespace rfpose
