#include <cmath>
#include <map>

#include "doctest.h"
#include "rfpose/camera.hpp"
#include "rfpose/errors.hpp"
#include "rfpose/scene.hpp"

using namespace rfpose;

namespace {
std::vector<double> bone_lengths(const Skeleton& sk) {
    std::vector<double> out;
    for (auto [a, b] : skeleton_bones())
        out.push_back((sk.keypoints[a].position - sk.keypoints[b].position).norm());
    return out;
}
}  // namespace

TEST_CASE("empty scene: none kind yields frames with clutter but no persons") {
    auto frames = generate_motion(MotionKind::none, 0, 1.0, 5.0, 1);
    CHECK(frames.size() == 5);
    for (const SceneFrame& f : frames) {
        CHECK(f.persons.empty());
        CHECK(!f.clutter.empty());
        CHECK(f.clutter.size() <= 4);
    }
    // persons=0 forces a no-person scene regardless of kind
    auto walk0 = generate_motion(MotionKind::walking, 0, 1.0, 5.0, 1);
    CHECK(walk0[0].persons.empty());
}

TEST_CASE("bone rigidity across a walking sequence") {
    auto frames = generate_motion(MotionKind::walking, 1, 2.0, 10.0, 7);
    REQUIRE(frames.size() == 20);
    auto ref = bone_lengths(frames.front().persons[0]);
    for (const SceneFrame& f : frames) {
        auto cur = bone_lengths(f.persons[0]);
        for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(cur[i] - ref[i]) < 1e-6);
    }
}

TEST_CASE("motion is deterministic for a fixed seed") {
    for (MotionKind kind : {MotionKind::walking, MotionKind::gesturing, MotionKind::sitting,
                            MotionKind::none}) {
        auto a = generate_motion(kind, kind == MotionKind::none ? 0 : 1, 2.0, 10.0, 7);
        auto b = generate_motion(kind, kind == MotionKind::none ? 0 : 1, 2.0, 10.0, 7);
        REQUIRE(a.size() == b.size());
        for (size_t f = 0; f < a.size(); ++f) {
            REQUIRE(a[f].persons.size() == b[f].persons.size());
            for (size_t p = 0; p < a[f].persons.size(); ++p)
                for (int k = 0; k < kKeypointCount; ++k) {
                    const auto& ka = a[f].persons[p].keypoints[k];
                    const auto& kb = b[f].persons[p].keypoints[k];
                    CHECK(ka.position.x == kb.position.x);
                    CHECK(ka.position.y == kb.position.y);
                    CHECK(ka.position.z == kb.position.z);
                    CHECK(ka.normal.x == kb.normal.x);
                }
        }
    }
}

TEST_CASE("keypoint speed stays under the cap and inside the room") {
    MotionParams params;
    double fps = 10.0;
    for (MotionKind kind : {MotionKind::walking, MotionKind::gesturing, MotionKind::sitting}) {
        for (uint64_t seed : {1ull, 2ull, 3ull, 9ull}) {
            auto frames = generate_motion(kind, 2, 3.0, fps, seed, params);
            for (size_t f = 0; f < frames.size(); ++f) {
                for (size_t p = 0; p < frames[f].persons.size(); ++p)
                    for (int k = 0; k < kKeypointCount; ++k) {
                        const Vec3& pos = frames[f].persons[p].keypoints[k].position;
                        CHECK(params.room.contains(pos));
                        CHECK(std::abs(frames[f].persons[p].keypoints[k].normal.norm() - 1.0) <
                              1e-9);
                        if (f > 0) {
                            const Vec3& prev = frames[f - 1].persons[p].keypoints[k].position;
                            CHECK((pos - prev).norm() <= params.v_max / fps);
                        }
                    }
            }
        }
    }
}

TEST_CASE("invalid motion configuration is rejected") {
    CHECK_THROWS_AS(generate_motion(MotionKind::walking, 1, 0.0, 10.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_motion(MotionKind::walking, 1, 1.0, -5.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_motion(MotionKind::walking, -1, 1.0, 5.0, 1), ConfigError);
}

TEST_CASE("oracle labels: optical axis projects to the image center") {
    PinholeCamera cam;
    RadarConfig radar;
    SceneFrame frame;
    frame.room = {{-1.2, -1.0, 1.6}, {1.2, 0.95, 4.0}};
    Skeleton sk;
    sk.identity = 0;
    for (int k = 0; k < kKeypointCount; ++k) {
        sk.keypoints[k].position = {0.0, 0.0, 2.5};  // on the optical axis
        sk.keypoints[k].normal = {0.0, 0.0, -1.0};   // facing the device
        sk.keypoints[k].area = 0.05;
    }
    frame.persons.push_back(sk);
    auto gt = oracle_labels(frame, cam, radar);
    REQUIRE(gt.persons.size() == 1);
    for (int k = 0; k < kKeypointCount; ++k) {
        CHECK(gt.persons[0].keypoints[k].alpha == 32);  // round(31.5 + 0)
        CHECK(gt.persons[0].keypoints[k].beta == 32);
        CHECK(gt.persons[0].keypoints[k].confidence == doctest::Approx(1.0));
    }
}

TEST_CASE("oracle labels: empty frame, clamping, and confidence decay") {
    PinholeCamera cam;
    RadarConfig radar;
    SceneFrame empty;
    CHECK(oracle_labels(empty, cam, radar).persons.empty());

    // a keypoint projecting outside the image is clamped and flagged
    SceneFrame frame;
    Skeleton sk;
    for (int k = 0; k < kKeypointCount; ++k) {
        sk.keypoints[k].position = {5.0, 0.0, 1.0};
        sk.keypoints[k].normal = {0.0, 0.0, -1.0};
    }
    frame.persons.push_back(sk);
    auto gt = oracle_labels(frame, cam, radar);
    CHECK(gt.persons[0].keypoints[0].clamped);
    CHECK(gt.persons[0].keypoints[0].alpha == cam.width - 1);

    // keypoint visible in all frames keeps confidence 1.0; a never-visible
    // keypoint decays toward the floor
    LabelOracle oracle{cam, radar, 3, 0.3, 0.8};
    std::vector<SceneFrame> seq;
    for (int f = 0; f < 30; ++f) {
        SceneFrame fr;
        Skeleton s;
        for (int k = 0; k < kKeypointCount; ++k) {
            s.keypoints[k].position = {0.0, 0.0, 2.0};
            s.keypoints[k].normal = k == 0 ? Vec3{0.0, 0.0, -1.0} : Vec3{0.0, 0.0, 1.0};
        }
        fr.persons.push_back(s);
        seq.push_back(fr);
    }
    auto labels = oracle.label_sequence(seq);
    CHECK(labels.back().persons[0].keypoints[0].confidence == doctest::Approx(1.0));
    CHECK(labels.back().persons[0].keypoints[1].confidence == doctest::Approx(0.3));
    // decay is monotone toward the floor
    double prev = 1.0;
    for (const auto& l : labels) {
        double n = l.persons[0].keypoints[1].confidence;
        CHECK(n <= prev + 1e-12);
        prev = n;
    }
}

TEST_CASE("camera frustum coverage is validated") {
    PinholeCamera cam;
    cam.validate_covers({{-1.2, -1.0, 1.6}, {1.2, 0.95, 4.0}});
    PinholeCamera narrow;
    narrow.fx = 400.0;
    CHECK_THROWS_AS(narrow.validate_covers({{-1.2, -1.0, 1.6}, {1.2, 0.95, 4.0}}), ConfigError);
}
