#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rfpose/dataset.hpp"
#include "rfpose/decoder.hpp"
#include "rfpose/evaluate.hpp"
#include "rfpose/prep.hpp"
#include "rfpose/radar.hpp"
#include "rfpose/rng.hpp"
#include "rfpose/scene.hpp"

namespace py = pybind11;
using namespace rfpose;

namespace {

RadarConfig radar_from_kwargs(double f_min, double f_max, int n_tx, double spacing) {
    RadarConfig cfg;
    cfg.f_min = f_min;
    cfg.f_max = f_max;
    cfg.n_tx = n_tx;
    cfg.spacing = spacing;
    return cfg;
}

py::array_t<float> heatmaps_to_array(const HeatmapPair& maps) {
    py::array_t<float> out({2, maps.height_vert, maps.width});
    auto buf = out.mutable_unchecked<3>();
    for (int r = 0; r < maps.height_horz; ++r)
        for (int c = 0; c < maps.width; ++c) buf(0, r, c) = maps.horz_at(r, c);
    for (int r = 0; r < maps.height_vert; ++r)
        for (int c = 0; c < maps.width; ++c) buf(1, r, c) = maps.vert_at(r, c);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "RF through-obstruction pose workbench core";

    m.def(
        "range_resolution",
        [](double f_min, double f_max) {
            RadarConfig cfg = radar_from_kwargs(f_min, f_max, 16, 0.0225);
            return range_resolution(cfg);
        },
        py::arg("f_min"), py::arg("f_max"));

    m.def(
        "angular_resolution",
        [](double f_min, double f_max, int n_tx, double spacing) {
            return angular_resolution(radar_from_kwargs(f_min, f_max, n_tx, spacing));
        },
        py::arg("f_min"), py::arg("f_max"), py::arg("n_tx"), py::arg("spacing"));

    m.def(
        "beat_to_delay",
        [](double delta_f, double slope) {
            RadarConfig cfg;
            cfg.chirp_slope = slope;
            return beat_to_delay(delta_f, cfg);
        },
        py::arg("delta_f"), py::arg("slope"));

    m.def("delay_to_range", &delay_to_range, py::arg("delta_t"));

    m.def(
        "medium_attenuation",
        [](const std::string& material, double thickness) {
            return medium_attenuation({material_from_string(material), thickness});
        },
        py::arg("material"), py::arg("thickness"));

    m.def("materials", []() {
        std::vector<std::string> out;
        for (Material mat : all_materials()) out.push_back(material_name(mat));
        return out;
    });

    m.def(
        "spherical_to_cartesian",
        [](double theta, double phi, double r) {
            Vec3 p = spherical_to_cartesian(theta, phi, r);
            return py::make_tuple(p.x, p.y, p.z);
        },
        py::arg("theta"), py::arg("phi"), py::arg("r"));

    m.def(
        "cartesian_to_spherical",
        [](double x, double y, double z) {
            Spherical s = cartesian_to_spherical({x, y, z});
            return py::make_tuple(s.theta, s.phi, s.r);
        },
        py::arg("x"), py::arg("y"), py::arg("z"));

    m.def(
        "project_heatmaps",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> vol, bool normalize) {
            if (vol.ndim() != 3) throw std::invalid_argument("volume must be 3-d (x, y, z)");
            CartesianVolume cv;
            cv.grid.x = {0.0, double(vol.shape(0)), int(vol.shape(0))};
            cv.grid.y = {0.0, double(vol.shape(1)), int(vol.shape(1))};
            cv.grid.z = {0.0, double(vol.shape(2)), int(vol.shape(2))};
            cv.power.assign(vol.data(), vol.data() + vol.size());
            HeatmapPair maps = project_heatmaps(cv, normalize);
            py::array_t<float> horz({maps.height_horz, maps.width});
            py::array_t<float> vert({maps.height_vert, maps.width});
            std::copy(maps.horz.begin(), maps.horz.end(), horz.mutable_data());
            std::copy(maps.vert.begin(), maps.vert.end(), vert.mutable_data());
            return py::make_tuple(horz, vert);
        },
        py::arg("volume"), py::arg("normalize") = true);

    m.def(
        "ks",
        [](double dx, double dy, double s, double k_i) { return ks(dx, dy, s, k_i); },
        py::arg("dx"), py::arg("dy"), py::arg("s"), py::arg("k_i"));

    m.def(
        "oks",
        [](py::array_t<double> truth, py::array_t<double> pred, py::array_t<double> conf,
           double s, py::array_t<double> k_i) -> py::object {
            if (truth.shape(0) != kNumKeypoints || pred.shape(0) != kNumKeypoints)
                throw std::invalid_argument("poses must have 15 keypoints");
            EvalConfig cfg;
            auto ki = k_i.unchecked<1>();
            for (int k = 0; k < kNumKeypoints; ++k) cfg.k_i[k] = ki(k);
            std::array<PoseKeypoint, kNumKeypoints> p{};
            std::array<LabeledKeypoint, kNumKeypoints> t{};
            auto tb = truth.unchecked<2>();
            auto pb = pred.unchecked<2>();
            auto cb = conf.unchecked<1>();
            for (int k = 0; k < kNumKeypoints; ++k) {
                t[k].alpha = int(tb(k, 0));
                t[k].beta = int(tb(k, 1));
                p[k].alpha = int(pb(k, 0));
                p[k].beta = int(pb(k, 1));
                p[k].confidence = float(cb(k));
            }
            auto v = oks(p, t, s, cfg);
            if (!v) return py::none();
            return py::float_(*v);
        },
        py::arg("truth"), py::arg("pred"), py::arg("confidence"), py::arg("s"), py::arg("k_i"));

    m.def("cls_weight", &cls_weight, py::arg("n"), py::arg("delta"));

    m.def(
        "joint_loss",
        [](double l_rpn, double l_track, double l_cls, double lam) {
            return l_rpn + lam * l_track + l_cls;
        },
        py::arg("l_rpn"), py::arg("l_track"), py::arg("l_cls"), py::arg("lam") = 0.75);

    m.def(
        "motion_keypoints",
        [](const std::string& kind, int persons, double duration_s, double fps, uint64_t seed) {
            auto frames =
                generate_motion(motion_kind_from_string(kind), persons, duration_s, fps, seed);
            size_t T = frames.size();
            size_t P = frames.empty() ? 0 : frames[0].persons.size();
            py::array_t<double> out({T, P, size_t(kKeypointCount), size_t(3)});
            auto buf = out.mutable_unchecked<4>();
            for (size_t t = 0; t < T; ++t)
                for (size_t p = 0; p < P; ++p)
                    for (int k = 0; k < kKeypointCount; ++k) {
                        const Vec3& v = frames[t].persons[p].keypoints[k].position;
                        buf(t, p, k, 0) = v.x;
                        buf(t, p, k, 1) = v.y;
                        buf(t, p, k, 2) = v.z;
                    }
            return out;
        },
        py::arg("kind"), py::arg("persons"), py::arg("duration_s"), py::arg("fps"),
        py::arg("seed"));

    m.def(
        "simulate_heatmaps",
        [](const std::string& kind, int persons, double duration_s, double fps, uint64_t seed,
           const std::string& material, double thickness) {
            Frontend fe;
            fe.motion.medium = {material_from_string(material), thickness};
            auto frames = generate_motion(motion_kind_from_string(kind), persons, duration_s, fps,
                                          seed, fe.motion);
            std::vector<py::array_t<float>> out;
            for (size_t f = 0; f < frames.size(); ++f)
                out.push_back(
                    heatmaps_to_array(fe.frame_heatmaps(frames[f], Rng::derive(seed, f))));
            return out;
        },
        py::arg("kind"), py::arg("persons"), py::arg("duration_s"), py::arg("fps"),
        py::arg("seed"), py::arg("material") = "air", py::arg("thickness") = 0.0);

    m.def("keypoint_names", []() {
        std::vector<std::string> out;
        for (int k = 0; k < kKeypointCount; ++k) out.push_back(keypoint_name(k));
        return out;
    });

#ifdef VERSION_INFO
#define STR2(x) #x
#define STR(x) STR2(x)
    m.attr("__version__") = STR(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
