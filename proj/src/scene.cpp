#include "rfpose/scene.hpp"

#include <algorithm>
#include <cmath>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"

namespace rfpose {

namespace {
constexpr double kTwoPi = 6.283185307179586;
constexpr double kPi = 3.141592653589793;
}

const char* keypoint_name(int k) {
    static const char* names[kKeypointCount] = {
        "head",   "shoulder_l", "shoulder_r", "elbow_l", "elbow_r",
        "hand_l", "hand_r",     "hip_l",      "hip_r",   "knee_l",
        "knee_r", "foot_l",     "foot_r",     "neck",    "mid_hip"};
    return names[k];
}

const char* keypoint_group(int k) {
    static const char* groups[kKeypointCount] = {
        "head", "shoulder", "shoulder", "elbow", "elbow", "hand", "hand", "hip",
        "hip",  "knee",     "knee",     "foot",  "foot",  "neck", "mid_hip"};
    return groups[k];
}

const std::vector<std::pair<int, int>>& skeleton_bones() {
    static const std::vector<std::pair<int, int>> bones = {
        {kNeck, kHead},     {kNeck, kShoulderL}, {kNeck, kShoulderR},
        {kShoulderL, kElbowL}, {kShoulderR, kElbowR}, {kElbowL, kHandL},
        {kElbowR, kHandR},  {kNeck, kMidHip},    {kMidHip, kHipL},
        {kMidHip, kHipR},   {kHipL, kKneeL},     {kHipR, kKneeR},
        {kKneeL, kFootL},   {kKneeR, kFootR}};
    return bones;
}

const std::vector<Material>& all_materials() {
    static const std::vector<Material> mats = {
        Material::air,        Material::wood,     Material::brick,    Material::drywall,
        Material::concrete,   Material::plastic,  Material::paper_board,
        Material::insulation, Material::linoleum, Material::carpet,   Material::fog,
        Material::leaves};
    return mats;
}

std::string material_name(Material m) {
    switch (m) {
        case Material::air: return "air";
        case Material::wood: return "wood";
        case Material::brick: return "brick";
        case Material::drywall: return "drywall";
        case Material::concrete: return "concrete";
        case Material::plastic: return "plastic";
        case Material::paper_board: return "paper_board";
        case Material::insulation: return "insulation";
        case Material::linoleum: return "linoleum";
        case Material::carpet: return "carpet";
        case Material::fog: return "fog";
        case Material::leaves: return "leaves";
    }
    return "air";
}

Material material_from_string(const std::string& s) {
    for (Material m : all_materials())
        if (material_name(m) == s) return m;
    throw ConfigError("unknown material: " + s);
}

std::string motion_kind_name(MotionKind k) {
    switch (k) {
        case MotionKind::walking: return "walking";
        case MotionKind::gesturing: return "gesturing";
        case MotionKind::sitting: return "sitting";
        case MotionKind::none: return "none";
    }
    return "none";
}

MotionKind motion_kind_from_string(const std::string& s) {
    if (s == "walking") return MotionKind::walking;
    if (s == "gesturing") return MotionKind::gesturing;
    if (s == "sitting") return MotionKind::sitting;
    if (s == "none") return MotionKind::none;
    throw ConfigError("unknown motion kind: " + s);
}

namespace {

// Fixed segment lengths; posing happens purely in joint-angle space so
// bone lengths are exact over a sequence.
struct BodyBuild {
    double height;
    double leg_upper, leg_lower, hip_half, spine, shoulder_half;
    double arm_upper, arm_lower, neck_head;

    explicit BodyBuild(double h) : height(h) {
        leg_upper = 0.245 * h;
        leg_lower = 0.246 * h;
        hip_half = 0.052 * h;
        spine = 0.288 * h;
        shoulder_half = 0.129 * h;
        arm_upper = 0.172 * h;
        arm_lower = 0.157 * h;
        neck_head = 0.112 * h;
    }
};

struct PersonTrack {
    BodyBuild build{1.7};
    int identity = 0;
    Vec3 path_center;               // closed elliptical walk path
    double radius_x = 0.5, radius_z = 0.5;
    double angular_rate = 0.0;      // rad/s along the path
    double phase0 = 0.0;
    double gait_phase0 = 0.0;
    double cadence_scale = 1.0;
    double yaw_static = 0.0;        // gesturing / sitting orientation
    double gesture_rate = 0.8;      // Hz
};

struct JointAngles {
    double hip_l = 0.0, hip_r = 0.0;      // thigh swing, + forward
    double knee_l = 0.05, knee_r = 0.05;  // flexion
    double shoulder_l = 0.0, shoulder_r = 0.0;
    double elbow_l = 0.0, elbow_r = 0.0;
    double sway = 0.0;                    // small vertical offset
};

Vec3 rotate_yaw(const Vec3& v, double yaw) {
    double c = std::cos(yaw), s = std::sin(yaw);
    return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
}

// Distance from pelvis down to the lower foot for the given leg angles.
double foot_drop(const BodyBuild& b, const JointAngles& a) {
    double l = b.leg_upper * std::cos(a.hip_l) + b.leg_lower * std::cos(a.hip_l - a.knee_l);
    double r = b.leg_upper * std::cos(a.hip_r) + b.leg_lower * std::cos(a.hip_r - a.knee_r);
    return std::max(l, r);
}

// Pose one skeleton with its pelvis at `root`, facing `yaw` (0 = +z).
Skeleton pose_skeleton(const BodyBuild& b, const Vec3& root, double yaw, const JointAngles& a,
                       int identity) {
    Skeleton sk;
    sk.identity = identity;
    auto place = [&](int k, const Vec3& body_pos) {
        sk.keypoints[k].position = root + rotate_yaw(body_pos, yaw);
    };

    // Body frame: +z forward, +y up, +x subject-left. Limbs swing in the
    // sagittal plane.
    Vec3 mid_hip{0, 0, 0};
    Vec3 neck{0, b.spine, 0};
    Vec3 head{0, b.spine + b.neck_head, 0.02};
    Vec3 hip_l{b.hip_half, 0, 0}, hip_r{-b.hip_half, 0, 0};
    Vec3 sho_l{b.shoulder_half, b.spine - 0.02 * b.height, 0};
    Vec3 sho_r{-b.shoulder_half, b.spine - 0.02 * b.height, 0};

    auto leg = [&](const Vec3& hip, double swing, double flex, Vec3& knee, Vec3& foot) {
        knee = hip + Vec3{0, -b.leg_upper * std::cos(swing), b.leg_upper * std::sin(swing)};
        double shank = swing - flex;
        foot = knee + Vec3{0, -b.leg_lower * std::cos(shank), b.leg_lower * std::sin(shank)};
    };
    Vec3 knee_l, foot_l, knee_r, foot_r;
    leg(hip_l, a.hip_l, a.knee_l, knee_l, foot_l);
    leg(hip_r, a.hip_r, a.knee_r, knee_r, foot_r);

    auto arm = [&](const Vec3& sho, double swing, double flex, Vec3& elbow, Vec3& hand) {
        elbow = sho + Vec3{0, -b.arm_upper * std::cos(swing), b.arm_upper * std::sin(swing)};
        double fore = swing + flex;
        hand = elbow + Vec3{0, -b.arm_lower * std::cos(fore), b.arm_lower * std::sin(fore)};
    };
    Vec3 elb_l, hand_l, elb_r, hand_r;
    arm(sho_l, a.shoulder_l, a.elbow_l, elb_l, hand_l);
    arm(sho_r, a.shoulder_r, a.elbow_r, elb_r, hand_r);

    place(kHead, head);
    place(kNeck, neck);
    place(kMidHip, mid_hip);
    place(kShoulderL, sho_l);
    place(kShoulderR, sho_r);
    place(kElbowL, elb_l);
    place(kElbowR, elb_r);
    place(kHandL, hand_l);
    place(kHandR, hand_r);
    place(kHipL, hip_l);
    place(kHipR, hip_r);
    place(kKneeL, knee_l);
    place(kKneeR, knee_r);
    place(kFootL, foot_l);
    place(kFootR, foot_r);

    static const double areas[kKeypointCount] = {0.035, 0.045, 0.045, 0.020, 0.020,
                                                 0.012, 0.012, 0.060, 0.060, 0.025,
                                                 0.025, 0.018, 0.018, 0.040, 0.100};
    // Parent joint per keypoint; the patch normal lies perpendicular to the
    // local bone, so swinging limbs sweep their normals across the array.
    static const int parent[kKeypointCount] = {kNeck,   kNeck,   kNeck,   kShoulderL, kShoulderR,
                                               kElbowL, kElbowR, kMidHip, kMidHip,    kHipL,
                                               kHipR,   kKneeL,  kKneeR,  kMidHip,    kNeck};
    Vec3 center = (sk.keypoints[kMidHip].position + sk.keypoints[kNeck].position) * 0.5;
    Vec3 forward = rotate_yaw({0, 0, 1}, yaw);
    for (int k = 0; k < kKeypointCount; ++k) {
        KeypointPatch& kp = sk.keypoints[k];
        kp.area = areas[k];
        Vec3 outward = kp.position - center;
        outward.y *= 0.25;  // bias normals toward horizontal, like a standing body
        Vec3 bone = (kp.position - sk.keypoints[parent[k]].position).normalized();
        Vec3 n = outward - bone * outward.dot(bone);
        if (n.norm() < 1e-6) n = forward;
        kp.normal = n.normalized();
    }
    return sk;
}

JointAngles walking_angles(double ph) {
    // amplitudes sized so swing-foot speed plus path speed stays under the
    // per-keypoint cap
    JointAngles a;
    a.hip_l = 0.28 * std::sin(ph);
    a.hip_r = 0.28 * std::sin(ph + kPi);
    a.knee_l = 0.22 * 0.5 * (1.0 - std::cos(ph - 0.5)) + 0.05;
    a.knee_r = 0.22 * 0.5 * (1.0 - std::cos(ph - 0.5 + kPi)) + 0.05;
    a.shoulder_l = 0.25 * std::sin(ph + kPi);
    a.shoulder_r = 0.25 * std::sin(ph);
    a.elbow_l = 0.35;
    a.elbow_r = 0.35;
    return a;
}

JointAngles gesturing_angles(double t, double rate, double phase0) {
    JointAngles a;
    double ph = kTwoPi * rate * t + phase0;
    a.shoulder_l = 0.9 + 0.5 * std::sin(ph);
    a.shoulder_r = 0.9 + 0.5 * std::sin(ph * 0.8 + 1.3);
    a.elbow_l = 0.6 + 0.35 * std::sin(ph * 1.1 + 0.4);
    a.elbow_r = 0.6 + 0.35 * std::cos(ph * 0.9);
    a.knee_l = a.knee_r = 0.06;
    return a;
}

JointAngles sitting_angles(double t, double phase0) {
    JointAngles a;
    a.hip_l = a.hip_r = 1.35;
    a.knee_l = a.knee_r = 1.45;
    a.shoulder_l = 0.25 + 0.03 * std::sin(kTwoPi * 0.3 * t + phase0);
    a.shoulder_r = 0.25 + 0.03 * std::cos(kTwoPi * 0.27 * t + phase0);
    a.elbow_l = a.elbow_r = 0.8;
    a.sway = 0.008 * std::sin(kTwoPi * 0.33 * t + phase0);
    return a;
}

// Horizontal margin the pelvis must keep from the walls per motion class.
double reach_margin(MotionKind kind, const BodyBuild& b) {
    switch (kind) {
        case MotionKind::walking: return 0.25 * b.height;
        case MotionKind::gesturing: return 0.36 * b.height;
        case MotionKind::sitting: return 0.31 * b.height;
        case MotionKind::none: return 0.0;
    }
    return 0.4 * b.height;
}

}  // namespace

std::vector<SceneFrame> generate_motion(MotionKind kind, int persons, double duration_s,
                                        double fps, uint64_t seed, const MotionParams& params) {
    if (duration_s <= 0.0) throw ConfigError("generate_motion: duration must be > 0");
    if (fps <= 0.0) throw ConfigError("generate_motion: fps must be > 0");
    if (persons < 0) throw ConfigError("generate_motion: persons must be >= 0");
    if (persons == 0) kind = MotionKind::none;

    Rng rng(Rng::derive(seed, 0x5ce7e));
    const Box3& room = params.room;
    double room_cx = 0.5 * (room.lo.x + room.hi.x);
    double room_cz = 0.5 * (room.lo.z + room.hi.z);
    double half_x = 0.5 * (room.hi.x - room.lo.x);
    double half_z = 0.5 * (room.hi.z - room.lo.z);

    int n_frames = std::max(1, int(std::llround(duration_s * fps)));

    std::vector<PersonTrack> tracks;
    for (int p = 0; p < (kind == MotionKind::none ? 0 : persons); ++p) {
        PersonTrack tr;
        tr.identity = p;
        tr.build = BodyBuild(rng.uniform(1.55, 1.85));
        double margin = reach_margin(kind, tr.build);
        double safe_x = std::max(0.02, half_x - margin);
        double safe_z = std::max(0.02, half_z - margin);
        // Spread multiple people apart so their paths stay distinct.
        double off_x = persons > 1 ? (p % 2 ? 0.55 : -0.55) * safe_x : rng.uniform(-0.2, 0.2) * safe_x;
        double off_z = persons > 1 ? (p / 2 ? 0.4 : -0.2) * safe_z : rng.uniform(-0.3, 0.3) * safe_z;
        tr.path_center = {room_cx + off_x, 0.0, room_cz + off_z};
        tr.radius_x = std::min(safe_x - std::abs(off_x), rng.uniform(0.3, 0.8));
        tr.radius_z = std::min(safe_z - std::abs(off_z), rng.uniform(0.4, 0.9));
        tr.radius_x = std::max(tr.radius_x, 0.05);
        tr.radius_z = std::max(tr.radius_z, 0.05);
        double r_max = std::max(tr.radius_x, tr.radius_z);
        tr.angular_rate = params.walk_speed / std::max(0.45, r_max);
        tr.phase0 = rng.uniform(0.0, kTwoPi);
        tr.gait_phase0 = rng.uniform(0.0, kTwoPi);
        tr.cadence_scale = rng.uniform(0.9, 1.1);
        tr.yaw_static = rng.uniform(-0.6, 0.6);
        tr.gesture_rate = rng.uniform(0.4, 0.6);
        tracks.push_back(tr);
    }

    std::vector<Reflector> clutter;
    if (kind == MotionKind::none) {
        int n = 1 + rng.uniform_int(4);
        for (int i = 0; i < n; ++i) {
            Reflector rf;
            rf.position = {rng.uniform(room.lo.x + 0.2, room.hi.x - 0.2),
                           rng.uniform(room.lo.y + 0.3, room.hi.y - 0.2),
                           rng.uniform(room.lo.z + 0.3, room.hi.z - 0.3)};
            // tilted roughly toward the device so it actually reflects
            Vec3 to_dev = (rf.position * -1.0).normalized();
            Vec3 jit{rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45),
                     rng.uniform(-0.45, 0.45)};
            rf.normal = (to_dev + jit).normalized();
            rf.area = rng.uniform(0.2, 1.0);
            clutter.push_back(rf);
        }
    }

    std::vector<SceneFrame> frames(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        SceneFrame& fr = frames[f];
        fr.time = double(f) / fps;
        fr.room = room;
        fr.medium = params.medium;
        fr.clutter = clutter;
        for (const PersonTrack& tr : tracks) {
            double t = fr.time;
            Vec3 root;
            double yaw = 0.0;
            JointAngles a;
            switch (kind) {
                case MotionKind::walking: {
                    double u = tr.phase0 + tr.angular_rate * t;
                    root = {tr.path_center.x + tr.radius_x * std::cos(u), 0.0,
                            tr.path_center.z + tr.radius_z * std::sin(u)};
                    yaw = std::atan2(-tr.radius_x * std::sin(u), tr.radius_z * std::cos(u));
                    a = walking_angles(kTwoPi * params.cadence_hz * tr.cadence_scale * t +
                                       tr.gait_phase0);
                    break;
                }
                case MotionKind::gesturing: {
                    root = {tr.path_center.x, 0.0, tr.path_center.z};
                    yaw = tr.yaw_static + 0.25 * std::sin(kTwoPi * 0.15 * t + tr.phase0);
                    a = gesturing_angles(t, tr.gesture_rate, tr.gait_phase0);
                    break;
                }
                case MotionKind::sitting: {
                    root = {tr.path_center.x, 0.0, tr.path_center.z};
                    yaw = tr.yaw_static + 0.05 * std::sin(kTwoPi * 0.21 * t + tr.phase0);
                    a = sitting_angles(t, tr.gait_phase0);
                    break;
                }
                case MotionKind::none: continue;
            }
            // pelvis rides on the stance leg; feet keep a little clearance
            root.y = room.lo.y + foot_drop(tr.build, a) + 0.012 + a.sway;
            fr.persons.push_back(pose_skeleton(tr.build, root, yaw, a, tr.identity));
        }
    }
    return frames;
}

}  // namespace rfpose
