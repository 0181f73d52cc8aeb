#include "rfpose/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"
#include "rfpose/scene.hpp"

using nlohmann::json;

namespace rfpose {

void EvalConfig::validate() const {
    for (double k : k_i)
        if (!(k > 0.0)) throw ConfigError("eval: k_i constants must be > 0");
    for (double t : thresholds)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("eval: thresholds must be in (0,1)");
}

double ks(double dx, double dy, double s, double k_i) {
    double d2 = dx * dx + dy * dy;
    return std::exp(-d2 / (2.0 * s * s * k_i * k_i));
}

std::optional<double> oks(const std::array<PoseKeypoint, kNumKeypoints>& pred,
                          const std::array<LabeledKeypoint, kNumKeypoints>& truth, double s,
                          const EvalConfig& cfg) {
    double acc = 0.0;
    int n = 0;
    for (int k = 0; k < kNumKeypoints; ++k) {
        if (!(pred[k].confidence > 0.0f)) continue;
        acc += ks(pred[k].alpha - truth[k].alpha, pred[k].beta - truth[k].beta, s, cfg.k_i[k]);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return acc / n;
}

std::vector<KpResult> evaluate_sequence(const std::vector<FramePoses>& pred,
                                        const std::vector<TruthFrame>& truth,
                                        const SequenceMeta& meta, const EvalConfig& cfg,
                                        double iou_match) {
    cfg.validate();
    if (pred.size() != truth.size())
        throw std::runtime_error("evaluate_sequence: frame count mismatch");
    std::vector<KpResult> out;
    for (size_t f = 0; f < truth.size(); ++f) {
        std::vector<std::array<float, 4>> pboxes, tboxes;
        for (const PosePerson& p : pred[f].persons) pboxes.push_back(p.box);
        for (const TruthPerson& t : truth[f].persons)
            tboxes.push_back({float(t.box[0]), float(t.box[1]), float(t.box[2]), float(t.box[3])});
        auto pairs = match_detections(pboxes, tboxes, iou_match);
        std::vector<int> truth_to_pred(tboxes.size(), -1);
        for (auto [p, t] : pairs) truth_to_pred[t] = p;

        for (size_t t = 0; t < truth[f].persons.size(); ++t) {
            const TruthPerson& tp = truth[f].persons[t];
            double s = std::sqrt(std::max(1.0, tp.box[2] * tp.box[3]));
            int pi = truth_to_pred[t];
            for (int k = 0; k < kNumKeypoints; ++k) {
                KpResult r;
                r.sequence = meta.name;
                r.category = meta.category;
                r.material = meta.material;
                r.occluded = meta.occluded;
                r.frame = int(f);
                r.identity = tp.identity;
                r.keypoint = k;
                if (pi >= 0) {
                    const PoseKeypoint& pk = pred[f].persons[pi].keypoints[k];
                    if (pk.confidence > 0.0f) {
                        r.predicted = true;
                        r.confidence = pk.confidence;
                        r.ks_value = ks(pk.alpha - tp.keypoints[k].alpha,
                                        pk.beta - tp.keypoints[k].beta, s, cfg.k_i[k]);
                    }
                }
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

namespace {
std::string group_key(const KpResult& r, GroupBy g) {
    switch (g) {
        case GroupBy::keypoint: return keypoint_group(r.keypoint);
        case GroupBy::person: return r.sequence + "#" + std::to_string(r.identity);
        case GroupBy::medium: return material_name(r.material);
        case GroupBy::visibility: return r.occluded ? "obstructed" : "visible";
    }
    return "";
}
}  // namespace

std::map<std::string, double> average_accuracy(const std::vector<KpResult>& results,
                                               double threshold, GroupBy group) {
    std::map<std::string, std::pair<int, int>> tally;  // hits, total
    for (const KpResult& r : results) {
        auto& [hits, total] = tally[group_key(r, group)];
        ++total;
        if (r.predicted && r.ks_value >= threshold) ++hits;
    }
    std::map<std::string, double> out;
    for (auto& [k, v] : tally) out[k] = v.second ? double(v.first) / v.second : 0.0;
    return out;
}

double overall_aa(const std::vector<KpResult>& results, double threshold) {
    int hits = 0;
    for (const KpResult& r : results)
        if (r.predicted && r.ks_value >= threshold) ++hits;
    return results.empty() ? 0.0 : double(hits) / double(results.size());
}

double missed_rate(const std::vector<KpResult>& results, double threshold) {
    if (results.empty()) return 0.0;
    int missed = 0;
    for (const KpResult& r : results)
        if (!r.predicted || r.ks_value < threshold) ++missed;
    return double(missed) / double(results.size());
}

ErrorBands error_bands(const std::vector<KpResult>& results) {
    ErrorBands b;
    if (results.empty()) return b;
    for (const KpResult& r : results) {
        if (!r.predicted || r.ks_value < 0.5)
            b.high += 1.0;
        else if (r.ks_value < 0.75)
            b.medium += 1.0;
        else
            b.low += 1.0;
    }
    double n = double(results.size());
    b.high /= n;
    b.medium /= n;
    b.low /= n;
    return b;
}

json EvalReport::to_json(bool with_timing) const {
    json j;
    j["aa"] = aa;
    j["overall_aa50"] = overall_aa50;
    j["overall_aa75"] = overall_aa75;
    j["error_bands"] = {{"high", bands.high}, {"medium", bands.medium}, {"low", bands.low}};
    j["oks_histogram"] = oks_histogram;
    j["ablation"] = ablation;
    j["notes"] = notes;
    if (with_timing)
        j["timing"] = {{"mean_s", timing.mean_s}, {"p95_s", timing.p95_s}, {"frames", timing.frames}};
    return j;
}

std::string EvalReport::to_csv() const {
    // rows = keypoint groups, columns = condition x threshold
    std::vector<std::string> conditions;
    for (const auto& [cond, _] : aa) conditions.push_back(cond);
    std::string out = "keypoint";
    for (const std::string& c : conditions) out += "," + c + "_ks50," + c + "_ks75";
    out += "\n";
    std::vector<std::string> groups;
    for (const auto& [cond, table] : aa)
        for (const auto& [g, _] : table)
            if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    std::sort(groups.begin(), groups.end());
    char buf[64];
    for (const std::string& g : groups) {
        out += g;
        for (const std::string& c : conditions) {
            for (const char* thr : {"0.50", "0.75"}) {
                auto it = aa.at(c).find(g);
                if (it != aa.at(c).end() && it->second.count(thr)) {
                    std::snprintf(buf, sizeof(buf), ",%.4f", it->second.at(thr));
                    out += buf;
                } else {
                    out += ",";
                }
            }
        }
        out += "\n";
    }
    return out;
}

namespace {

std::string thr_key(double t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", t);
    return buf;
}

// Ground truth piped through as the prediction stream; validates the harness.
std::vector<FramePoses> oracle_predictions(const std::vector<TruthFrame>& truth) {
    std::vector<FramePoses> out;
    for (const TruthFrame& tf : truth) {
        FramePoses fp;
        fp.time = tf.time;
        for (const TruthPerson& tp : tf.persons) {
            PosePerson pp;
            pp.identity = tp.identity;
            for (int i = 0; i < 4; ++i) pp.box[i] = float(tp.box[i]);
            pp.objectness = 1.0f;
            for (int k = 0; k < kNumKeypoints; ++k) {
                pp.keypoints[k].alpha = tp.keypoints[k].alpha;
                pp.keypoints[k].beta = tp.keypoints[k].beta;
                pp.keypoints[k].confidence = 1.0f;
            }
            fp.persons.push_back(pp);
        }
        out.push_back(std::move(fp));
    }
    return out;
}

}  // namespace

EvalReport run_suite(const Checkpoint& ck, const Manifest& dataset, const Frontend& frontend,
                     const RunSuiteOptions& opts) {
    opts.eval.validate();
    EvalReport report;
    auto test_metas = dataset.split("test");
    if (opts.max_sequences > 0 && int(test_metas.size()) > opts.max_sequences)
        test_metas.resize(opts.max_sequences);
    if (test_metas.empty()) throw ConfigError("run_suite: dataset has no test split");

    std::unique_ptr<PoseModel> model;
    std::unique_ptr<PoseModel> ablation_model;
    if (!opts.oracle_as_model) model = model_from_checkpoint(ck);
    if (opts.ablation_checkpoint) {
        Checkpoint ack = load_checkpoint(*opts.ablation_checkpoint);
        ablation_model = model_from_checkpoint(ack);
    }

    // conditions: the dataset's own frames ("as_recorded" buckets split by
    // visibility), plus matched re-simulations per requested medium
    std::vector<KpResult> recorded_results;
    std::map<std::string, std::vector<KpResult>> condition_results;
    std::vector<double> frame_times;
    std::vector<KpResult> ablation_results, main_results_for_ablation;

    for (const SequenceMeta& meta : test_metas) {
        LoadedSequence seq = load_sequence(dataset, meta);
        std::vector<double> times;
        for (const TruthFrame& tf : seq.labels) times.push_back(tf.time);

        std::vector<FramePoses> poses;
        if (opts.oracle_as_model)
            poses = oracle_predictions(seq.labels);
        else
            poses = infer_sequence(*model, seq.frames, times, opts.mode, &frame_times);
        auto res = evaluate_sequence(poses, seq.labels, meta, opts.eval);
        recorded_results.insert(recorded_results.end(), res.begin(), res.end());

        if (ablation_model && meta.persons > 0) {
            auto ab_poses =
                infer_sequence(*ablation_model, seq.frames, times, InferMode::frame_by_frame);
            auto ab_res = evaluate_sequence(ab_poses, seq.labels, meta, opts.eval);
            ablation_results.insert(ablation_results.end(), ab_res.begin(), ab_res.end());
            main_results_for_ablation.insert(main_results_for_ablation.end(), res.begin(),
                                             res.end());
        }

        // per-person OKS histogram over the recorded stream
        for (size_t f = 0; f < seq.labels.size(); ++f) {
            std::vector<std::array<float, 4>> pboxes, tboxes;
            for (const PosePerson& p : poses[f].persons) pboxes.push_back(p.box);
            for (const TruthPerson& t : seq.labels[f].persons)
                tboxes.push_back(
                    {float(t.box[0]), float(t.box[1]), float(t.box[2]), float(t.box[3])});
            auto pairs = match_detections(pboxes, tboxes, 0.3);
            for (auto [pi, ti] : pairs) {
                const TruthPerson& tp = seq.labels[f].persons[ti];
                std::array<LabeledKeypoint, kNumKeypoints> tkp = tp.keypoints;
                double s = std::sqrt(std::max(1.0, tp.box[2] * tp.box[3]));
                auto v = oks(poses[f].persons[pi].keypoints, tkp, s, opts.eval);
                if (report.oks_histogram.empty()) report.oks_histogram.assign(10, 0);
                if (v) report.oks_histogram[std::min(9, int(*v * 10.0))]++;
            }
        }
    }

    // matched-seed re-simulation per medium (air is the visible reference)
    if (!opts.media.empty() && !opts.oracle_as_model) {
        std::vector<Material> media = opts.media;
        if (std::find(media.begin(), media.end(), Material::air) == media.end())
            media.insert(media.begin(), Material::air);
        for (Material mat : media) {
            std::vector<KpResult> results;
            for (const SequenceMeta& meta : test_metas) {
                if (meta.persons == 0) continue;
                MotionParams mp = frontend.motion;
                mp.medium = {mat, mat == Material::air ? 0.0 : opts.medium_thickness};
                double duration = meta.frames / meta.fps;
                auto frames = generate_motion(meta.kind, meta.persons, duration, meta.fps,
                                              meta.motion_seed, mp);
                auto labels = frontend.sequence_labels(frames);
                std::vector<std::vector<float>> heat;
                std::vector<double> times;
                std::vector<TruthFrame> truth;
                for (size_t f = 0; f < frames.size(); ++f) {
                    HeatmapPair maps = frontend.frame_heatmaps(
                        frames[f], Rng::derive(meta.motion_seed, uint64_t(f)));
                    std::vector<float> row = maps.horz;
                    row.insert(row.end(), maps.vert.begin(), maps.vert.end());
                    heat.push_back(std::move(row));
                    times.push_back(frames[f].time);
                    TruthFrame tf;
                    tf.time = frames[f].time;
                    for (size_t p = 0; p < frames[f].persons.size(); ++p) {
                        TruthPerson tp;
                        tp.identity = labels[f].persons[p].identity;
                        tp.box = frontend.person_box(frames[f].persons[p]);
                        tp.keypoints = labels[f].persons[p].keypoints;
                        tf.persons.push_back(std::move(tp));
                    }
                    truth.push_back(std::move(tf));
                }
                SequenceMeta cond_meta = meta;
                cond_meta.material = mat;
                cond_meta.occluded = mat != Material::air;
                auto poses = infer_sequence(*model, heat, times, opts.mode);
                auto res = evaluate_sequence(poses, truth, cond_meta, opts.eval);
                results.insert(results.end(), res.begin(), res.end());
            }
            std::string cond = mat == Material::air ? "visible" : "medium:" + material_name(mat);
            condition_results[cond] = std::move(results);
        }
    }

    // recorded stream split by visibility
    {
        std::vector<KpResult> vis, occ;
        for (const KpResult& r : recorded_results) (r.occluded ? occ : vis).push_back(r);
        if (!vis.empty()) condition_results.insert({"recorded_visible", vis});
        if (!occ.empty()) condition_results.insert({"recorded_obstructed", occ});
    }

    for (auto& [cond, results] : condition_results) {
        if (results.empty()) {
            report.notes.push_back("condition " + cond + " had no keypoints; omitted");
            continue;
        }
        for (double thr : opts.eval.thresholds) {
            auto table = average_accuracy(results, thr, GroupBy::keypoint);
            for (auto& [group, aa] : table) report.aa[cond][group][thr_key(thr)] = aa;
        }
        report.overall_aa50[cond] = overall_aa(results, 0.50);
        report.overall_aa75[cond] = overall_aa(results, 0.75);
    }
    report.bands = error_bands(recorded_results);

    if (!frame_times.empty()) {
        std::vector<double> sorted = frame_times;
        std::sort(sorted.begin(), sorted.end());
        report.timing.frames = int(sorted.size());
        report.timing.mean_s =
            std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(sorted.size());
        report.timing.p95_s = sorted[size_t(0.95 * double(sorted.size() - 1))];
    }

    if (ablation_model) {
        report.ablation["many2many_aa50"] = overall_aa(main_results_for_ablation, 0.50);
        report.ablation["framewise_aa50"] = overall_aa(ablation_results, 0.50);
        report.ablation["many2many_missed_rate"] = missed_rate(main_results_for_ablation);
        report.ablation["framewise_missed_rate"] = missed_rate(ablation_results);
    } else if (opts.ablation_checkpoint.has_value()) {
        report.notes.push_back("ablation checkpoint could not be loaded; section skipped");
    } else {
        report.notes.push_back("no ablation checkpoint supplied; comparison skipped");
    }
    return report;
}

}  // namespace rfpose
