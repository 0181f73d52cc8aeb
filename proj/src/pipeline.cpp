#include "rfpose/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "rfpose/errors.hpp"
#include "rfpose/render.hpp"
#include "rfpose/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rfpose {

void RunConfig::validate() const {
    frontend.validate();
    dataset.validate();
    model.validate();
    train.validate();
    eval.validate();
    if (model.heat_w != frontend.grid.x.steps || model.heat_h != frontend.grid.y.steps)
        throw ConfigError("config: model heatmap resolution must match the cartesian grid");
    if (eval_medium_thickness < 0.0) throw ConfigError("config: eval thickness must be >= 0");
}

namespace {

json axis_to_json(const GridAxis& a, double unit = 1.0) {
    return json{a.lo / unit, a.hi / unit, a.steps};
}

GridAxis axis_from_json(const json& j, double unit = 1.0) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("config: grid axis needs [lo, hi, steps]");
    return GridAxis{j.at(0).get<double>() * unit, j.at(1).get<double>() * unit, j.at(2).get<int>()};
}

json materials_to_json(const std::vector<Material>& ms) {
    json out = json::array();
    for (Material m : ms) out.push_back(material_name(m));
    return out;
}

std::vector<Material> materials_from_json(const json& j) {
    std::vector<Material> out;
    for (const json& v : j) out.push_back(material_from_string(v.get<std::string>()));
    return out;
}

}  // namespace

json run_config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["radar"] = {{"f_min", c.frontend.radar.f_min},
                  {"f_max", c.frontend.radar.f_max},
                  {"chirp_slope", c.frontend.radar.chirp_slope},
                  {"n_tx", c.frontend.radar.n_tx},
                  {"spacing", c.frontend.radar.spacing},
                  {"theta_deg", axis_to_json(c.frontend.radar.theta, kDegree)},
                  {"phi_deg", axis_to_json(c.frontend.radar.phi, kDegree)},
                  {"range_m", axis_to_json(c.frontend.radar.range)},
                  {"noise_floor", c.frontend.radar.noise_floor},
                  {"power_scale", c.frontend.radar.power_scale},
                  {"lobe_exponent", c.frontend.radar.lobe_exponent},
                  {"visibility_eps", c.frontend.radar.visibility_eps}};
    j["cartesian"] = {{"x", axis_to_json(c.frontend.grid.x)},
                      {"y", axis_to_json(c.frontend.grid.y)},
                      {"z", axis_to_json(c.frontend.grid.z)}};
    j["camera"] = {{"width", c.frontend.camera.width},
                   {"height", c.frontend.camera.height},
                   {"fx", c.frontend.camera.fx},
                   {"fy", c.frontend.camera.fy},
                   {"cx", c.frontend.camera.cx},
                   {"cy", c.frontend.camera.cy}};
    j["scene"] = {{"room_x", json{c.frontend.motion.room.lo.x, c.frontend.motion.room.hi.x}},
                  {"room_y", json{c.frontend.motion.room.lo.y, c.frontend.motion.room.hi.y}},
                  {"room_z", json{c.frontend.motion.room.lo.z, c.frontend.motion.room.hi.z}},
                  {"v_max", c.frontend.motion.v_max},
                  {"walk_speed", c.frontend.motion.walk_speed},
                  {"cadence_hz", c.frontend.motion.cadence_hz}};
    j["labels"] = {{"window", c.frontend.label_window},
                   {"confidence_floor", c.frontend.confidence_floor},
                   {"decay", c.frontend.label_decay}};
    json cats = json::array();
    for (const CategorySpec& cat : c.dataset.categories)
        cats.push_back(json{{"name", cat.name},
                            {"kind", motion_kind_name(cat.kind)},
                            {"persons", cat.persons},
                            {"occluded", cat.occluded},
                            {"weight", cat.weight}});
    j["dataset"] = {{"total", c.dataset.total},
                    {"categories", cats},
                    {"media", materials_to_json(c.dataset.media)},
                    {"thickness", c.dataset.thickness},
                    {"fps", c.dataset.fps},
                    {"duration_s", c.dataset.duration_s}};
    j["model"] = model_config_to_json(c.model);
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_windows", c.train.batch_windows},
                  {"window", c.train.window},
                  {"window_stride", c.train.window_stride},
                  {"lr", c.train.adam.lr},
                  {"beta1", c.train.adam.beta1},
                  {"beta2", c.train.adam.beta2},
                  {"eps", c.train.adam.eps},
                  {"early_stop_train_aa", c.train.early_stop_train_aa},
                  {"early_check_every", c.train.early_check_every}};
    j["eval"] = {{"k_i", c.eval.k_i},
                 {"thresholds", c.eval.thresholds},
                 {"media", materials_to_json(c.eval_media)},
                 {"medium_thickness", c.eval_medium_thickness},
                 {"max_sequences", c.eval_max_sequences}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.seed = j.at("seed").get<uint64_t>();
    const json& r = j.at("radar");
    c.frontend.radar.f_min = r.at("f_min").get<double>();
    c.frontend.radar.f_max = r.at("f_max").get<double>();
    c.frontend.radar.chirp_slope = r.at("chirp_slope").get<double>();
    c.frontend.radar.n_tx = r.at("n_tx").get<int>();
    c.frontend.radar.spacing = r.at("spacing").get<double>();
    c.frontend.radar.theta = axis_from_json(r.at("theta_deg"), kDegree);
    c.frontend.radar.phi = axis_from_json(r.at("phi_deg"), kDegree);
    c.frontend.radar.range = axis_from_json(r.at("range_m"));
    c.frontend.radar.noise_floor = r.at("noise_floor").get<double>();
    c.frontend.radar.power_scale = r.at("power_scale").get<double>();
    c.frontend.radar.lobe_exponent = r.at("lobe_exponent").get<double>();
    c.frontend.radar.visibility_eps = r.at("visibility_eps").get<double>();
    const json& g = j.at("cartesian");
    c.frontend.grid.x = axis_from_json(g.at("x"));
    c.frontend.grid.y = axis_from_json(g.at("y"));
    c.frontend.grid.z = axis_from_json(g.at("z"));
    const json& cam = j.at("camera");
    c.frontend.camera.width = cam.at("width").get<int>();
    c.frontend.camera.height = cam.at("height").get<int>();
    c.frontend.camera.fx = cam.at("fx").get<double>();
    c.frontend.camera.fy = cam.at("fy").get<double>();
    c.frontend.camera.cx = cam.at("cx").get<double>();
    c.frontend.camera.cy = cam.at("cy").get<double>();
    const json& sc = j.at("scene");
    c.frontend.motion.room.lo.x = sc.at("room_x").at(0).get<double>();
    c.frontend.motion.room.hi.x = sc.at("room_x").at(1).get<double>();
    c.frontend.motion.room.lo.y = sc.at("room_y").at(0).get<double>();
    c.frontend.motion.room.hi.y = sc.at("room_y").at(1).get<double>();
    c.frontend.motion.room.lo.z = sc.at("room_z").at(0).get<double>();
    c.frontend.motion.room.hi.z = sc.at("room_z").at(1).get<double>();
    c.frontend.motion.v_max = sc.at("v_max").get<double>();
    c.frontend.motion.walk_speed = sc.at("walk_speed").get<double>();
    c.frontend.motion.cadence_hz = sc.at("cadence_hz").get<double>();
    const json& lb = j.at("labels");
    c.frontend.label_window = lb.at("window").get<int>();
    c.frontend.confidence_floor = lb.at("confidence_floor").get<double>();
    c.frontend.label_decay = lb.at("decay").get<double>();
    const json& d = j.at("dataset");
    c.dataset.total = d.at("total").get<int>();
    c.dataset.categories.clear();
    for (const json& jc : d.at("categories")) {
        CategorySpec cat;
        cat.name = jc.at("name").get<std::string>();
        cat.kind = motion_kind_from_string(jc.at("kind").get<std::string>());
        cat.persons = jc.at("persons").get<int>();
        cat.occluded = jc.at("occluded").get<bool>();
        cat.weight = jc.at("weight").get<double>();
        c.dataset.categories.push_back(std::move(cat));
    }
    c.dataset.media = materials_from_json(d.at("media"));
    c.dataset.thickness = d.at("thickness").get<double>();
    c.dataset.fps = d.at("fps").get<double>();
    c.dataset.duration_s = d.at("duration_s").get<double>();
    c.model = model_config_from_json(j.at("model"));
    const json& t = j.at("train");
    c.train.epochs = t.at("epochs").get<int>();
    c.train.batch_windows = t.at("batch_windows").get<int>();
    c.train.window = t.at("window").get<int>();
    c.train.window_stride = t.at("window_stride").get<int>();
    c.train.adam.lr = t.at("lr").get<float>();
    c.train.adam.beta1 = t.at("beta1").get<float>();
    c.train.adam.beta2 = t.at("beta2").get<float>();
    c.train.adam.eps = t.at("eps").get<float>();
    c.train.early_stop_train_aa = t.at("early_stop_train_aa").get<double>();
    c.train.early_check_every = t.at("early_check_every").get<int>();
    c.train.seed = c.seed;
    const json& e = j.at("eval");
    auto ki = e.at("k_i");
    if (ki.size() != size_t(kNumKeypoints)) throw ConfigError("config: eval.k_i needs 15 entries");
    for (int k = 0; k < kNumKeypoints; ++k) c.eval.k_i[k] = ki.at(k).get<double>();
    c.eval.thresholds = e.at("thresholds").get<std::vector<double>>();
    c.eval_media = materials_from_json(e.at("media"));
    c.eval_medium_thickness = e.at("medium_thickness").get<double>();
    c.eval_max_sequences = e.at("max_sequences").get<int>();
    c.train.eval = c.eval;
    return c;
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

// every key in `user` must exist in `reference` (recursively for objects)
void reject_unknown_keys(const json& user, const json& reference, const std::string& prefix) {
    if (!user.is_object()) return;
    if (!reference.is_object())
        throw ConfigError("config: unexpected object at " + (prefix.empty() ? "/" : prefix));
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string path = prefix + "/" + it.key();
        if (!reference.contains(it.key())) throw ConfigError("config: unknown key " + path);
        if (it.value().is_object()) reject_unknown_keys(it.value(), reference.at(it.key()), path);
    }
}

json deep_merge(json base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) return overlay;
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()))
            base[it.key()] = deep_merge(base.at(it.key()), it.value());
        else
            base[it.key()] = it.value();
    }
    return base;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

// build into a temp dir next to the target, then rename into place
class StagedDir {
public:
    explicit StagedDir(const std::string& final_dir) : final_(final_dir) {
        if (fs::exists(final_))
            throw ConfigError("output already exists: " + final_dir);
        tmp_ = final_;
        tmp_ += ".tmp";
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }
    const fs::path& path() const { return tmp_; }
    void commit() {
        fs::rename(tmp_, final_);
        committed_ = true;
    }
    ~StagedDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(tmp_, ec);
        }
    }

private:
    fs::path final_, tmp_;
    bool committed_ = false;
};

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    json user;
    try {
        user = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    json ref = run_config_to_json(default_run_config());
    reject_unknown_keys(user, ref, "");
    json merged = deep_merge(ref, user);
    RunConfig cfg;
    try {
        cfg = run_config_from_json(merged);
    } catch (const json::exception& e) {
        throw ConfigError("config field error in " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void cmd_gen(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    StagedDir staged(out_dir);
    make_dataset(cfg.dataset, cfg.frontend, cfg.seed, staged.path().string(),
                 run_config_to_json(cfg));
    staged.commit();
}

namespace {

void write_train_outputs(const fs::path& dir, const RunConfig& cfg, const TrainOutput& out,
                         const std::string& dataset_dir, const std::string& mode) {
    save_checkpoint((dir / "checkpoint.rfck").string(), out.best);
    save_checkpoint((dir / "checkpoint_final.rfck").string(), out.final_ckpt);
    write_text(dir / "train_report.csv", out.report.to_csv());
    json manifest;
    manifest["config"] = run_config_to_json(cfg);
    manifest["dataset"] = dataset_dir;
    manifest["mode"] = mode;
    manifest["best_epoch"] = out.report.best_epoch;
    manifest["best_val_aa50"] = out.report.best_val_aa50;
    write_text(dir / "run_manifest.json", manifest.dump(1, '\t') + "\n");
}

}  // namespace

namespace {
void print_epoch(const EpochStats& e) {
    std::fprintf(stderr, "epoch %3d  l_rpn %.3f  l_track %.3f  l_cls %.3f  val_aa50 %.3f  %.1fs\n",
                 e.epoch, e.l_rpn, e.l_track, e.l_cls, e.val_aa50, e.seconds);
}
}  // namespace

void cmd_train(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir) {
    cfg.validate();
    Manifest man = load_manifest(dataset_dir);
    StagedDir staged(out_dir);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.on_epoch = print_epoch;
    TrainOutput out = train(man, cfg.model, tc);
    write_train_outputs(staged.path(), cfg, out, dataset_dir, "many2many");
    staged.commit();
}

void cmd_ablate(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& dataset_dir, const std::string& out_dir) {
    cfg.validate();
    Checkpoint base = load_checkpoint(checkpoint);
    Manifest man = load_manifest(dataset_dir);
    StagedDir staged(out_dir);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.on_epoch = print_epoch;
    TrainOutput out = finetune_frame_by_frame(base, man, tc);
    write_train_outputs(staged.path(), cfg, out, dataset_dir, "framewise");
    staged.commit();
}

void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& dataset_dir,
              const std::string& out_dir, InferMode mode,
              const std::optional<std::string>& ablation_checkpoint, bool oracle_as_model) {
    cfg.validate();
    Checkpoint ck = load_checkpoint(checkpoint);
    Manifest man = load_manifest(dataset_dir);
    StagedDir staged(out_dir);
    RunSuiteOptions opts;
    opts.eval = cfg.eval;
    opts.media = cfg.eval_media;
    opts.medium_thickness = cfg.eval_medium_thickness;
    opts.oracle_as_model = oracle_as_model;
    opts.mode = mode;
    opts.ablation_checkpoint = ablation_checkpoint;
    opts.max_sequences = cfg.eval_max_sequences;
    EvalReport report = run_suite(ck, man, cfg.frontend, opts);
    write_text(staged.path() / "eval_report.json", report.to_json(true).dump(1, '\t') + "\n");
    write_text(staged.path() / "eval_report.csv", report.to_csv());
    staged.commit();
}

void cmd_bench(const RunConfig& cfg, const std::string& checkpoint,
               const std::string& dataset_dir, int max_frames, std::string& summary_out) {
    cfg.validate();
    Checkpoint ck = load_checkpoint(checkpoint);
    Manifest man = load_manifest(dataset_dir);
    auto model = model_from_checkpoint(ck);
    auto metas = man.split("test");
    if (metas.empty()) metas = man.sequences;
    std::vector<double> times;
    for (const SequenceMeta& meta : metas) {
        if (max_frames > 0 && int(times.size()) >= max_frames) break;
        LoadedSequence seq = load_sequence(man, meta);
        std::vector<double> ts;
        for (const TruthFrame& tf : seq.labels) ts.push_back(tf.time);
        infer_sequence(*model, seq.frames, ts,
                       ck.default_mode == "framewise" ? InferMode::frame_by_frame
                                                      : InferMode::many_to_many,
                       &times);
    }
    if (times.empty()) throw std::runtime_error("bench: no frames");
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(sorted.size());
    double p95 = sorted[size_t(0.95 * double(sorted.size() - 1))];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "frames=%zu mean_s=%.6f p95_s=%.6f\n", sorted.size(), mean,
                  p95);
    summary_out = buf;
}

void cmd_render(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& dataset_dir, const std::string& sequence,
                const std::string& out_dir, InferMode mode) {
    cfg.validate();
    Manifest man = load_manifest(dataset_dir);
    const SequenceMeta* meta = nullptr;
    for (const SequenceMeta& m : man.sequences)
        if (m.name == sequence) meta = &m;
    if (!meta) throw ConfigError("render: no sequence named " + sequence + " in " + dataset_dir);
    LoadedSequence seq = load_sequence(man, *meta);
    std::vector<double> ts;
    for (const TruthFrame& tf : seq.labels) ts.push_back(tf.time);

    std::vector<FramePoses> poses;
    if (!checkpoint.empty()) {
        Checkpoint ck = load_checkpoint(checkpoint);
        auto model = model_from_checkpoint(ck);
        poses = infer_sequence(*model, seq.frames, ts, mode);
    }
    StagedDir staged(out_dir);
    for (size_t f = 0; f < seq.frames.size(); ++f) {
        Image img = render_frame(seq.frames[f], seq.heat_h, seq.heat_w, seq.labels[f],
                                 poses.empty() ? nullptr : &poses[f], cfg.frontend.camera.width,
                                 cfg.frontend.camera.height);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "frame_%04d.ppm", int(f));
        img.save_ppm((staged.path() / buf).string());
    }
    staged.commit();
}

}  // namespace rfpose
