#include "rfpose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"
#include "rfpose/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rfpose {

void Frontend::validate() const {
    radar.validate();
    camera.validate_covers(motion.room);
    if (grid.y.steps != grid.z.steps)
        throw ConfigError("frontend: heatmap grids must share a row count (y steps == z steps)");
    if (label_window < 1) throw ConfigError("frontend: label window must be >= 1");
    if (confidence_floor < 0.0 || confidence_floor > 1.0)
        throw ConfigError("frontend: confidence floor must be in [0,1]");
}

HeatmapPair Frontend::frame_heatmaps(const SceneFrame& frame, uint64_t noise_seed) const {
    SimulationResult sim = simulate_frame(frame, radar, noise_seed);
    CartesianVolume cart = resample_volume(sim.volume, grid);
    return project_heatmaps(cart, true);
}

std::vector<GroundTruthPose> Frontend::sequence_labels(
    const std::vector<SceneFrame>& frames) const {
    LabelOracle oracle{camera, radar, label_window, confidence_floor, label_decay};
    return oracle.label_sequence(frames);
}

std::pair<double, double> Frontend::vert_pixel(const Vec3& p) const {
    double col = (p.x - grid.x.lo) / grid.x.spacing() - 0.5;
    double row = (grid.y.hi - p.y) / grid.y.spacing() - 0.5;
    return {col, row};
}

std::array<double, 4> Frontend::person_box(const Skeleton& sk) const {
    double min_c = 1e9, max_c = -1e9, min_r = 1e9, max_r = -1e9;
    for (const KeypointPatch& kp : sk.keypoints) {
        auto [c, r] = vert_pixel(kp.position);
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
    }
    // pad a little beyond the joints; heads and feet extend past keypoints
    double pad_c = 1.5, pad_r = 2.0;
    min_c -= pad_c;
    max_c += pad_c;
    min_r -= pad_r;
    max_r += pad_r;
    return {0.5 * (min_c + max_c), 0.5 * (min_r + max_r), max_c - min_c, max_r - min_r};
}

std::vector<CategorySpec> default_categories() {
    return {
        {"no_person", MotionKind::none, 0, false, 3750},
        {"walking", MotionKind::walking, 1, false, 18750},
        {"gesturing", MotionKind::gesturing, 1, false, 11250},
        {"sitting", MotionKind::sitting, 1, false, 3750},
        {"multi_person", MotionKind::walking, 2, false, 7500},
        {"no_person_occluded", MotionKind::none, 0, true, 3750},
        {"walking_occluded", MotionKind::walking, 1, true, 11250},
        {"gesturing_occluded", MotionKind::gesturing, 1, true, 7500},
        {"sitting_occluded", MotionKind::sitting, 1, true, 3750},
        {"multi_person_occluded", MotionKind::walking, 2, true, 3750},
    };
}

void DatasetSpec::validate() const {
    if (total < 20) throw ConfigError("dataset: totals below 20 make the 75/5/20 split degenerate");
    if (categories.empty()) throw ConfigError("dataset: no categories");
    double wsum = 0.0;
    for (const CategorySpec& c : categories) {
        if (c.weight < 0.0) throw ConfigError("dataset: negative category weight");
        wsum += c.weight;
    }
    if (wsum <= 0.0) throw ConfigError("dataset: category weights sum to zero");
    bool any_occluded = false;
    for (const CategorySpec& c : categories) any_occluded |= c.occluded;
    if (any_occluded && media.empty())
        throw ConfigError("dataset: occluded categories need a non-empty media list");
    if (fps <= 0.0 || duration_s <= 0.0) throw ConfigError("dataset: fps and duration must be > 0");
    if (thickness < 0.0) throw ConfigError("dataset: thickness must be >= 0");
}

std::vector<int> apportion(int total, const std::vector<double>& weights) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<int> out(weights.size(), 0);
    std::vector<std::pair<double, size_t>> rema;
    int assigned = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        double exact = total * weights[i] / wsum;
        out[i] = int(std::floor(exact));
        assigned += out[i];
        rema.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; i < total - assigned; ++i) out[rema[i % rema.size()].second]++;
    return out;
}

namespace {

json keypoint_to_json(const LabeledKeypoint& kp) {
    return json{{"a", kp.alpha}, {"b", kp.beta}, {"n", kp.confidence}, {"clamped", kp.clamped}};
}

LabeledKeypoint keypoint_from_json(const json& j) {
    LabeledKeypoint kp;
    kp.alpha = j.at("a").get<int>();
    kp.beta = j.at("b").get<int>();
    kp.confidence = j.at("n").get<double>();
    kp.clamped = j.at("clamped").get<bool>();
    return kp;
}

}  // namespace

Manifest make_dataset(const DatasetSpec& spec, const Frontend& frontend, uint64_t seed,
                      const std::string& out_dir, const json& config_echo) {
    spec.validate();
    frontend.validate();

    std::vector<double> weights;
    for (const CategorySpec& c : spec.categories) weights.push_back(c.weight);
    std::vector<int> counts = apportion(spec.total, weights);

    // Pool per category, shuffled within; then a round-robin interleave so
    // contiguous split chunks still mix categories.
    Rng rng(Rng::derive(seed, 0xda7a));
    struct Pending {
        size_t category;
        uint64_t motion_seed;
        Material material;
    };
    std::vector<std::vector<Pending>> pools(spec.categories.size());
    int global_idx = 0;
    for (size_t c = 0; c < spec.categories.size(); ++c) {
        const CategorySpec& cat = spec.categories[c];
        for (int i = 0; i < counts[c]; ++i, ++global_idx) {
            Pending p;
            p.category = c;
            p.motion_seed = Rng::derive(seed, uint64_t(global_idx) + 1000);
            p.material = cat.occluded ? spec.media[size_t(i) % spec.media.size()] : Material::air;
            pools[c].push_back(p);
        }
        rng.shuffle(pools[c]);
    }
    std::vector<Pending> order;
    for (size_t done = 0; done < size_t(spec.total);) {
        for (auto& pool : pools)
            if (!pool.empty()) {
                order.push_back(pool.back());
                pool.pop_back();
                ++done;
            }
    }

    // Greedy quota fill keeps every split close to its target share at every
    // prefix of the ordered list, so categories spread across splits.
    std::vector<int> split_target = apportion(spec.total, {0.75, 0.05, 0.20});
    static const char* split_names[3] = {"train", "val", "test"};
    std::array<int, 3> split_assigned{0, 0, 0};
    auto next_split = [&]() {
        int best = -1;
        double best_need = -1.0;
        for (int s = 0; s < 3; ++s) {
            if (split_assigned[s] >= split_target[s]) continue;
            double need = double(split_target[s] - split_assigned[s]) / split_target[s];
            if (need > best_need) {
                best_need = need;
                best = s;
            }
        }
        split_assigned[best]++;
        return best;
    };

    Manifest man;
    man.seed = seed;
    man.config_echo = config_echo;
    man.root = out_dir;
    fs::create_directories(out_dir);

    int n_frames = std::max(1, int(std::llround(spec.duration_s * spec.fps)));
    for (int i = 0; i < spec.total; ++i) {
        const Pending& p = order[i];
        const CategorySpec& cat = spec.categories[p.category];
        SequenceMeta m;
        m.id = i;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "seq_%04d", i);
        m.name = buf;
        m.category = cat.name;
        m.kind = cat.kind;
        m.persons = cat.persons;
        m.occluded = cat.occluded;
        m.material = p.material;
        m.thickness = cat.occluded ? spec.thickness : 0.0;
        m.split = split_names[next_split()];
        m.frames = n_frames;
        m.fps = spec.fps;
        m.motion_seed = p.motion_seed;
        man.sequences.push_back(m);
    }

    for (const SequenceMeta& m : man.sequences) {
        MotionParams mp = frontend.motion;
        mp.medium = {m.material, m.thickness};
        std::vector<SceneFrame> frames =
            generate_motion(m.kind, m.persons, spec.duration_s, spec.fps, m.motion_seed, mp);
        std::vector<GroundTruthPose> labels = frontend.sequence_labels(frames);

        fs::path seq_dir = fs::path(out_dir) / m.name;
        fs::create_directories(seq_dir);

        std::vector<json> frame_labels(frames.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int f = 0; f < int(frames.size()); ++f) {
            HeatmapPair maps =
                frontend.frame_heatmaps(frames[f], Rng::derive(m.motion_seed, uint64_t(f)));
            TensorFile tf;
            tf.shape = {2, uint32_t(maps.height_vert), uint32_t(maps.width)};
            tf.data = maps.horz;
            tf.data.insert(tf.data.end(), maps.vert.begin(), maps.vert.end());
            char fbuf[32];
            std::snprintf(fbuf, sizeof(fbuf), "frame_%04d.rft", f);
            write_tensor((seq_dir / fbuf).string(), tf);

            json jf;
            jf["t"] = frames[f].time;
            jf["persons"] = json::array();
            for (size_t pi = 0; pi < frames[f].persons.size(); ++pi) {
                const Skeleton& sk = frames[f].persons[pi];
                const PersonLabel& pl = labels[f].persons[pi];
                json jp;
                jp["id"] = pl.identity;
                jp["box"] = frontend.person_box(sk);
                json kps = json::array();
                for (int k = 0; k < kKeypointCount; ++k) kps.push_back(keypoint_to_json(pl.keypoints[k]));
                jp["kp"] = std::move(kps);
                jf["persons"].push_back(std::move(jp));
            }
            frame_labels[f] = std::move(jf);
        }
        json jl;
        jl["frames"] = frame_labels;
        std::ofstream lf(seq_dir / "labels.json");
        lf << jl.dump(1, '\t') << "\n";
    }

    json jm;
    jm["format"] = "rfpose-dataset-v1";
    jm["seed"] = seed;
    jm["config"] = config_echo;
    jm["sequences"] = json::array();
    for (const SequenceMeta& m : man.sequences) {
        jm["sequences"].push_back(json{{"id", m.id},
                                       {"name", m.name},
                                       {"category", m.category},
                                       {"kind", motion_kind_name(m.kind)},
                                       {"persons", m.persons},
                                       {"occluded", m.occluded},
                                       {"material", material_name(m.material)},
                                       {"thickness", m.thickness},
                                       {"split", m.split},
                                       {"frames", m.frames},
                                       {"fps", m.fps},
                                       {"motion_seed", m.motion_seed}});
    }
    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    mf << jm.dump(1, '\t') << "\n";
    return man;
}

std::vector<SequenceMeta> Manifest::split(const std::string& name) const {
    std::vector<SequenceMeta> out;
    for (const SequenceMeta& m : sequences)
        if (m.split == name) out.push_back(m);
    return out;
}

Manifest load_manifest(const std::string& dataset_dir) {
    fs::path p = fs::path(dataset_dir) / "manifest.json";
    std::ifstream f(p);
    if (!f) throw ConfigError("no dataset manifest at " + p.string());
    json jm = json::parse(f);
    if (jm.value("format", "") != "rfpose-dataset-v1")
        throw ConfigError("unrecognized dataset format in " + p.string());
    Manifest man;
    man.seed = jm.at("seed").get<uint64_t>();
    man.config_echo = jm.value("config", json::object());
    man.root = dataset_dir;
    for (const json& js : jm.at("sequences")) {
        SequenceMeta m;
        m.id = js.at("id").get<int>();
        m.name = js.at("name").get<std::string>();
        m.category = js.at("category").get<std::string>();
        m.kind = motion_kind_from_string(js.at("kind").get<std::string>());
        m.persons = js.at("persons").get<int>();
        m.occluded = js.at("occluded").get<bool>();
        m.material = material_from_string(js.at("material").get<std::string>());
        m.thickness = js.at("thickness").get<double>();
        m.split = js.at("split").get<std::string>();
        m.frames = js.at("frames").get<int>();
        m.fps = js.at("fps").get<double>();
        m.motion_seed = js.at("motion_seed").get<uint64_t>();
        man.sequences.push_back(std::move(m));
    }
    return man;
}

std::vector<TruthFrame> load_labels(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("no labels at " + path);
    json jl = json::parse(f);
    std::vector<TruthFrame> out;
    for (const json& jf : jl.at("frames")) {
        TruthFrame tf;
        tf.time = jf.at("t").get<double>();
        for (const json& jp : jf.at("persons")) {
            TruthPerson tp;
            tp.identity = jp.at("id").get<int>();
            auto box = jp.at("box");
            for (int i = 0; i < 4; ++i) tp.box[i] = box.at(i).get<double>();
            const json& kps = jp.at("kp");
            for (int k = 0; k < kKeypointCount; ++k) tp.keypoints[k] = keypoint_from_json(kps.at(k));
            tf.persons.push_back(std::move(tp));
        }
        out.push_back(std::move(tf));
    }
    return out;
}

LoadedSequence load_sequence(const Manifest& manifest, const SequenceMeta& meta) {
    LoadedSequence seq;
    seq.meta = meta;
    fs::path dir = fs::path(manifest.root) / meta.name;
    seq.labels = load_labels((dir / "labels.json").string());
    for (int f = 0; f < meta.frames; ++f) {
        char fbuf[32];
        std::snprintf(fbuf, sizeof(fbuf), "frame_%04d.rft", f);
        TensorFile tf = read_tensor((dir / fbuf).string());
        if (tf.shape.size() != 3 || tf.shape[0] != 2)
            throw std::runtime_error("unexpected heatmap tensor shape in " + (dir / fbuf).string());
        seq.heat_h = int(tf.shape[1]);
        seq.heat_w = int(tf.shape[2]);
        seq.frames.push_back(std::move(tf.data));
    }
    return seq;
}

}  // namespace rfpose
