#include "rfpose/decoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"

namespace rfpose {

using ad::Var;

void ModelConfig::validate() const {
    if (heat_h < 16 || heat_w < 16 || heat_h % 4 || heat_w % 4)
        throw ConfigError("model: heatmap resolution must be a multiple of 4 and >= 16");
    if (base_channels < 1 || num_blocks < 2) throw ConfigError("model: backbone too small");
    if (p_max < 1) throw ConfigError("model: p_max must be >= 1");
    if (classes_x < 2 || classes_y < 2) throw ConfigError("model: need >= 2 pixel classes");
    if (lstm_hidden < 1 || key_dim < 1) throw ConfigError("model: head sizes must be >= 1");
    if (window < 1) throw ConfigError("model: window must be >= 1");
    if (lambda_track <= 0.0f) throw ConfigError("model: lambda must be > 0");
    if (track_margin <= 0.0f) throw ConfigError("model: track margin must be > 0");
}

std::string infer_mode_name(InferMode m) {
    return m == InferMode::many_to_many ? "many2many" : "framewise";
}

InferMode infer_mode_from_string(const std::string& s) {
    if (s == "many2many") return InferMode::many_to_many;
    if (s == "framewise") return InferMode::frame_by_frame;
    throw ConfigError("unknown inference mode: " + s + " (expected many2many|framewise)");
}

namespace {

std::vector<ad::real> uniform_init(Rng& rng, size_t n, double scale) {
    std::vector<ad::real> v(n);
    for (ad::real& f : v) f = rng.uniform(-scale, scale);
    return v;
}

}  // namespace

Var PoseModel::register_param(const std::string& name, ad::Shape shape, Var v) {
    (void)shape;
    params_.emplace_back(name, v);
    return v;
}

PoseModel::PoseModel(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(Rng::derive(init_seed, 0x90de1));

    auto conv_param = [&](const std::string& name, int f, int c, int kh, int kw) {
        double s = std::sqrt(1.0 / (c * kh * kw));
        return register_param(name, {f, c, kh, kw},
                              Var::param({f, c, kh, kw}, uniform_init(rng, size_t(f) * c * kh * kw, s)));
    };
    auto vec_param = [&](const std::string& name, int n, double fill = 0.0) {
        return register_param(name, {n}, Var::param({n}, std::vector<ad::real>(size_t(n), fill)));
    };
    auto mat_param = [&](const std::string& name, int rows, int cols) {
        double s = std::sqrt(1.0 / cols);
        return register_param(name, {rows, cols},
                              Var::param({rows, cols}, uniform_init(rng, size_t(rows) * cols, s)));
    };

    int c0 = cfg_.base_channels;
    int c1 = cfg_.feat_channels();
    conv_param("stem.k", c0, 2, 3, 3);
    vec_param("stem.b", c0);
    int stage1 = cfg_.num_blocks / 2;
    for (int b = 0; b < cfg_.num_blocks; ++b) {
        bool transition = b == stage1;
        int cin = b <= stage1 ? c0 : c1;
        int cout = b >= stage1 ? c1 : c0;
        std::string p = "block" + std::to_string(b);
        conv_param(p + ".k1", cout, cin, 3, 3);
        vec_param(p + ".b1", cout);
        conv_param(p + ".k2", cout, cout, 3, 3);
        vec_param(p + ".b2", cout);
        if (transition) {
            conv_param(p + ".proj_k", cout, cin, 1, 1);
            vec_param(p + ".proj_b", cout);
        }
    }
    conv_param("rpn.k", 5, c1, 1, 1);
    vec_param("rpn.b", 5);
    conv_param("embed.k", 1, c1, 1, 1);
    vec_param("embed.b", 1);

    int H = cfg_.lstm_hidden;
    double ls = std::sqrt(1.0 / (kDetectionDim + H));
    lstm_.input_dim = kDetectionDim;
    lstm_.hidden_dim = H;
    lstm_.w_x = register_param("lstm.w_x", {4 * H, kDetectionDim},
                               Var::param({4 * H, kDetectionDim},
                                          uniform_init(rng, size_t(4) * H * kDetectionDim, ls)));
    lstm_.w_h = register_param("lstm.w_h", {4 * H, H},
                               Var::param({4 * H, H}, uniform_init(rng, size_t(4) * H * H, ls)));
    // forget-gate bias starts open so early state survives
    std::vector<ad::real> lb(size_t(4) * H, 0.0);
    for (int i = H; i < 2 * H; ++i) lb[i] = 1.0f;
    lstm_.bias = register_param("lstm.b", {4 * H}, Var::param({4 * H}, std::move(lb)));

    for (int k = 0; k < kNumKeypoints; ++k) {
        std::string p = "kp" + std::to_string(k);
        mat_param(p + ".w", cfg_.key_dim, H);
        vec_param(p + ".b", cfg_.key_dim);
    }
    mat_param("head_alpha.w", cfg_.classes_x, cfg_.key_dim);
    vec_param("head_alpha.b", cfg_.classes_x);
    mat_param("head_beta.w", cfg_.classes_y, cfg_.key_dim);
    vec_param("head_beta.b", cfg_.classes_y);

    mat_param("fbf.w", H, kDetectionDim);
    vec_param("fbf.b", H);
}

Var PoseModel::param(const std::string& name) const {
    for (const auto& [n, v] : params_)
        if (n == name) return v;
    throw std::runtime_error("no parameter named " + name);
}

size_t PoseModel::scalar_count() const {
    size_t n = 0;
    for (const auto& [name, v] : params_) n += v.count();
    return n;
}

std::vector<ad::real> PoseModel::flat_values() const {
    std::vector<ad::real> out;
    out.reserve(scalar_count());
    for (const auto& [name, v] : params_) out.insert(out.end(), v.value().begin(), v.value().end());
    return out;
}

void PoseModel::set_flat_values(const std::vector<ad::real>& v) {
    if (v.size() != scalar_count()) throw std::runtime_error("set_flat_values: size mismatch");
    size_t pos = 0;
    for (auto& [name, p] : params_) {
        std::copy(v.begin() + pos, v.begin() + pos + p.count(), p.value().begin());
        pos += p.count();
    }
}

void PoseModel::accumulate_flat_grads(std::vector<ad::real>& acc) const {
    acc.resize(scalar_count(), 0.0f);
    size_t pos = 0;
    for (const auto& [name, p] : params_) {
        const auto& g = p.node()->grad;
        // params outside the current tape have empty grads
        for (size_t i = 0; i < g.size(); ++i) acc[pos + i] += g[i];
        pos += p.count();
    }
}

Var PoseModel::backbone_forward(const Var& maps) const {
    if (maps.shape() != ad::Shape{2, cfg_.heat_h, cfg_.heat_w})
        throw ConfigError("backbone: expected heatmaps " +
                          ad::shape_str({2, cfg_.heat_h, cfg_.heat_w}) + ", got " +
                          ad::shape_str(maps.shape()));
    Var x = ad::relu(ad::conv2d(maps, param("stem.k"), param("stem.b"), 2, 1));
    int stage1 = cfg_.num_blocks / 2;
    for (int b = 0; b < cfg_.num_blocks; ++b) {
        bool transition = b == stage1;
        std::string p = "block" + std::to_string(b);
        int stride = transition ? 2 : 1;
        Var branch = ad::relu(ad::conv2d(x, param(p + ".k1"), param(p + ".b1"), stride, 1));
        branch = ad::conv2d(branch, param(p + ".k2"), param(p + ".b2"), 1, 1);
        Var skip = transition ? ad::conv2d(x, param(p + ".proj_k"), param(p + ".proj_b"), 2, 0) : x;
        x = ad::add(skip, branch);
    }
    return x;
}

Var PoseModel::rpn_raw(const Var& features) const {
    return ad::conv2d(features, param("rpn.k"), param("rpn.b"), 1, 0);
}

Var PoseModel::embed_map(const Var& features) const {
    return ad::conv2d(features, param("embed.k"), param("embed.b"), 1, 0);
}

Var PoseModel::objectness_logits(const Var& rpn_flat) const {
    return ad::slice1d(rpn_flat, 0, cfg_.feat_h() * cfg_.feat_w());
}

Var PoseModel::decode_box(const Var& rpn_flat, int cell_y, int cell_x) const {
    int fh = cfg_.feat_h(), fw = cfg_.feat_w();
    float s = float(cfg_.feat_stride());
    auto at = [&](int ch) { return ad::pick(rpn_flat, (ch * fh + cell_y) * fw + cell_x); };
    Var cx = ad::ax_plus_b(ad::sigmoid(at(1)), s, s * cell_x);
    Var cy = ad::ax_plus_b(ad::sigmoid(at(2)), s, s * cell_y);
    Var w = ad::scaled_exp(at(3), cfg_.anchor_w, 4.0f);
    Var h = ad::scaled_exp(at(4), cfg_.anchor_h, 4.0f);
    return ad::concat1d({cx, cy, w, h});
}

Var PoseModel::sigma_from_box(const Var& embed, const std::array<float, 4>& box_px) const {
    float s = float(cfg_.feat_stride());
    return ad::flatten(ad::roi_pool(embed, box_px[0] / s, box_px[1] / s,
                                    std::max(box_px[2] / s, 1.0f), std::max(box_px[3] / s, 1.0f),
                                    kRoiSize, kRoiSize));
}

PoseModel::Proposals PoseModel::propose_regions(const Var& features) const {
    Var rpn = rpn_raw(features);
    Var flat = ad::flatten(rpn);
    Var emb = embed_map(features);
    int fh = cfg_.feat_h(), fw = cfg_.feat_w();

    struct Cell {
        float obj;
        int y, x;
    };
    std::vector<Cell> cells;
    for (int i = 0; i < fh; ++i)
        for (int j = 0; j < fw; ++j) {
            float logit = flat.value()[size_t(i) * fw + j];
            float obj = 1.0f / (1.0f + std::exp(-logit));
            if (obj >= cfg_.objectness_threshold) cells.push_back({obj, i, j});
        }
    std::stable_sort(cells.begin(), cells.end(),
                     [](const Cell& a, const Cell& b) { return a.obj > b.obj; });
    if (int(cells.size()) > cfg_.p_max) cells.resize(cfg_.p_max);

    Proposals out;
    out.matrix.assign(size_t(cfg_.p_max) * kDetectionDim, 0.0f);
    for (size_t d = 0; d < cells.size(); ++d) {
        Detection det;
        det.objectness = cells[d].obj;
        Var box = decode_box(flat, cells[d].y, cells[d].x);
        for (int i = 0; i < 4; ++i) det.box[i] = float(box.value()[i]);
        Var sig = sigma_from_box(emb, det.box);
        for (int i = 0; i < kSigmaDim; ++i) det.sigma[i] = float(sig.value()[i]);
        float* row = out.matrix.data() + d * kDetectionDim;
        std::copy(det.box.begin(), det.box.end(), row);
        std::copy(det.sigma.begin(), det.sigma.end(), row + 4);
        out.detections.push_back(std::move(det));
    }
    return out;
}

std::vector<PoseModel::KeypointLogits> PoseModel::keypoint_heads(const Var& person_repr) const {
    std::vector<KeypointLogits> out;
    out.reserve(kNumKeypoints);
    Var wa = param("head_alpha.w"), ba = param("head_alpha.b");
    Var wb = param("head_beta.w"), bb = param("head_beta.b");
    for (int k = 0; k < kNumKeypoints; ++k) {
        std::string p = "kp" + std::to_string(k);
        Var h = ad::affine(param(p + ".w"), person_repr, param(p + ".b"));
        out.push_back({ad::affine(wa, h, ba), ad::affine(wb, h, bb)});
    }
    return out;
}

Var PoseModel::lstm_input(const Var& detection_row) const {
    // boxes come in heatmap pixels; bring them to the feature scale of sigma
    Var box = ad::ax_plus_b(ad::slice1d(detection_row, 0, 4), 1.0f / cfg_.heat_w, 0.0f);
    return ad::concat1d({box, ad::slice1d(detection_row, 4, kSigmaDim)});
}

Var PoseModel::framewise_repr(const Var& detection_row) const {
    return ad::affine(param("fbf.w"), lstm_input(detection_row), param("fbf.b"), ad::Act::Tanh);
}

// --- losses -----------------------------------------------------------------

Var rpn_loss(const std::vector<std::vector<Var>>& pred,
             const std::vector<std::vector<std::array<float, 4>>>& truth) {
    if (pred.size() != truth.size()) throw std::runtime_error("rpn_loss: window size mismatch");
    std::vector<Var> loc, cont;
    for (size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].size() != truth[t].size())
            throw std::runtime_error("rpn_loss: frame " + std::to_string(t) +
                                     " person count mismatch");
        for (size_t p = 0; p < pred[t].size(); ++p) {
            loc.push_back(ad::smooth_l1_sum(
                pred[t][p], {truth[t][p][0], truth[t][p][1], truth[t][p][2], truth[t][p][3]}));
            if (t > 0 && p < pred[t - 1].size())
                cont.push_back(ad::l1_diff_sum(pred[t][p], pred[t - 1][p]));
        }
    }
    Var total = ad::add_n(loc);
    if (!cont.empty()) total = ad::add(total, ad::scale(ad::add_n(cont), 0.2f));
    return total;
}

Var track_loss(const std::vector<std::vector<Var>>& sigmas,
               const std::vector<std::vector<int>>& identities, float margin) {
    if (sigmas.size() != identities.size()) throw std::runtime_error("track_loss: size mismatch");
    std::vector<Var> terms;
    for (size_t t = 1; t < sigmas.size(); ++t)
        for (size_t p = 0; p < sigmas[t].size(); ++p)
            for (size_t q = 0; q < sigmas[t - 1].size(); ++q) {
                Var d = ad::l2_distance(sigmas[t][p], sigmas[t - 1][q]);
                if (identities[t][p] == identities[t - 1][q])
                    terms.push_back(d);
                else
                    terms.push_back(ad::scale(ad::clamp_max(d, margin), -1.0f));
            }
    return ad::add_n(terms);
}

double cls_weight(double n, double delta) { return n * std::exp(delta - std::log(2.0)); }

Var cls_loss(const std::vector<PoseModel::KeypointLogits>& logits,
             const std::array<KeypointTruth, kNumKeypoints>& truth, float delta_cap) {
    if (int(logits.size()) != kNumKeypoints) throw std::runtime_error("cls_loss: 15 keypoints expected");
    std::vector<Var> terms;
    for (int k = 0; k < kNumKeypoints; ++k) {
        int pa = ad::argmax(logits[k].alpha.value());
        int pb = ad::argmax(logits[k].beta.value());
        double da = pa - truth[k].alpha, db = pb - truth[k].beta;
        double delta = std::sqrt(da * da + db * db);
        // delta is a constant per step; the cap keeps the exponent bounded
        float w = float(cls_weight(truth[k].confidence, std::min(delta, double(delta_cap))));
        terms.push_back(ad::softmax_cross_entropy(logits[k].alpha, truth[k].alpha, w));
        terms.push_back(ad::softmax_cross_entropy(logits[k].beta, truth[k].beta, w));
    }
    return ad::add_n(terms);
}

Var joint_loss(const Var& l_rpn, const Var& l_track, const Var& l_cls, float lambda) {
    return ad::add(l_rpn, ad::add(ad::scale(l_track, lambda), l_cls));
}

// --- matching ----------------------------------------------------------------

double box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b) {
    auto corners = [](const std::array<float, 4>& v) {
        return std::array<double, 4>{v[0] - 0.5 * v[2], v[1] - 0.5 * v[3], v[0] + 0.5 * v[2],
                                     v[1] + 0.5 * v[3]};
    };
    auto ca = corners(a), cb = corners(b);
    double ix = std::max(0.0, std::min(ca[2], cb[2]) - std::max(ca[0], cb[0]));
    double iy = std::max(0.0, std::min(ca[3], cb[3]) - std::max(ca[1], cb[1]));
    double inter = ix * iy;
    double areas = double(a[2]) * a[3] + double(b[2]) * b[3] - inter;
    return areas > 0.0 ? inter / areas : 0.0;
}

std::vector<std::pair<int, int>> match_detections(const std::vector<std::array<float, 4>>& pred,
                                                  const std::vector<std::array<float, 4>>& truth,
                                                  double iou_threshold) {
    std::vector<std::pair<int, int>> out;
    std::vector<bool> pused(pred.size(), false), tused(truth.size(), false);
    while (true) {
        double best = iou_threshold;
        int bp = -1, bt = -1;
        for (size_t p = 0; p < pred.size(); ++p) {
            if (pused[p]) continue;
            for (size_t t = 0; t < truth.size(); ++t) {
                if (tused[t]) continue;
                double iou = box_iou(pred[p], truth[t]);
                if (iou > best) {  // strict: ties keep the earliest pair
                    best = iou;
                    bp = int(p);
                    bt = int(t);
                }
            }
        }
        if (bp < 0) break;
        pused[bp] = tused[bt] = true;
        out.emplace_back(bp, bt);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --- inference -----------------------------------------------------------------

namespace {

struct Slot {
    int id = 0;
    ad::LstmState state;
    std::array<float, kSigmaDim> last_sigma{};
    int last_frame = -1;
};

double sigma_dist(const std::array<float, kSigmaDim>& a, const std::array<float, kSigmaDim>& b) {
    double acc = 0.0;
    for (int i = 0; i < kSigmaDim; ++i) {
        double d = double(a[i]) - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Var detection_row_const(const Detection& det) {
    std::vector<ad::real> row(kDetectionDim);
    std::copy(det.box.begin(), det.box.end(), row.begin());
    std::copy(det.sigma.begin(), det.sigma.end(), row.begin() + 4);
    return Var::constant({kDetectionDim}, std::move(row));
}

PosePerson decode_person(const PoseModel& model, const Var& repr, const Detection& det, int id) {
    PosePerson out;
    out.identity = id;
    out.box = det.box;
    out.objectness = det.objectness;
    auto heads = model.keypoint_heads(repr);
    for (int k = 0; k < kNumKeypoints; ++k) {
        auto pa = ad::softmax_values(heads[k].alpha.value());
        auto pb = ad::softmax_values(heads[k].beta.value());
        int a = ad::argmax(pa), b = ad::argmax(pb);
        out.keypoints[k].alpha = a;
        out.keypoints[k].beta = b;
        out.keypoints[k].confidence = float(std::sqrt(pa[a] * pb[b]));
    }
    return out;
}

// keep inference graphs frame-local
ad::LstmState detach(const ad::LstmState& s) {
    return {Var::constant(s.h.shape(), s.h.value()), Var::constant(s.c.shape(), s.c.value())};
}

}  // namespace

std::vector<FramePoses> infer_sequence(const PoseModel& model,
                                       const std::vector<std::vector<float>>& heatmap_frames,
                                       const std::vector<double>& timestamps, InferMode mode,
                                       std::vector<double>* frame_seconds) {
    const ModelConfig& cfg = model.config();
    if (heatmap_frames.size() != timestamps.size())
        throw std::runtime_error("infer_sequence: frame/timestamp count mismatch");
    for (size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1])
            throw std::runtime_error("infer_sequence: timestamps must be strictly increasing");

    std::vector<FramePoses> out;
    std::vector<Slot> slots;
    int next_id = 0;
    for (size_t f = 0; f < heatmap_frames.size(); ++f) {
        auto t_start = std::chrono::steady_clock::now();
        if (heatmap_frames[f].size() != size_t(2) * cfg.heat_h * cfg.heat_w)
            throw std::runtime_error("infer_sequence: bad heatmap size at frame " +
                                     std::to_string(f));
        Var maps = Var::constant({2, cfg.heat_h, cfg.heat_w},
                                 std::vector<ad::real>(heatmap_frames[f].begin(),
                                                       heatmap_frames[f].end()));
        Var features = model.backbone_forward(maps);
        auto proposals = model.propose_regions(features);

        FramePoses fp;
        fp.time = timestamps[f];

        if (mode == InferMode::frame_by_frame) {
            int id = 0;
            for (const Detection& det : proposals.detections) {
                Var repr = model.framewise_repr(detection_row_const(det));
                fp.persons.push_back(decode_person(model, repr, det, id++));
            }
        } else {
            // greedy sigma-feature matching to open slots
            std::vector<int> assign(proposals.detections.size(), -1);
            std::vector<bool> slot_used(slots.size(), false);
            while (true) {
                double best = cfg.track_margin;
                int bd = -1, bs = -1;
                for (size_t d = 0; d < proposals.detections.size(); ++d) {
                    if (assign[d] >= 0) continue;
                    for (size_t s = 0; s < slots.size(); ++s) {
                        if (slot_used[s]) continue;
                        double dist = sigma_dist(proposals.detections[d].sigma, slots[s].last_sigma);
                        if (dist < best) {
                            best = dist;
                            bd = int(d);
                            bs = int(s);
                        }
                    }
                }
                if (bd < 0) break;
                assign[bd] = bs;
                slot_used[bs] = true;
            }
            for (size_t d = 0; d < proposals.detections.size(); ++d) {
                if (assign[d] >= 0) continue;
                if (int(slots.size()) < cfg.p_max) {
                    slots.push_back({next_id++, ad::lstm_zero_state(cfg.lstm_hidden), {}, -1});
                } else {
                    // recycle the stalest slot
                    int stale = 0;
                    for (size_t s = 1; s < slots.size(); ++s)
                        if (slots[s].last_frame < slots[stale].last_frame) stale = int(s);
                    slots[stale] = {next_id++, ad::lstm_zero_state(cfg.lstm_hidden), {}, -1};
                    assign[d] = stale;
                    continue;
                }
                assign[d] = int(slots.size()) - 1;
            }
            for (size_t d = 0; d < proposals.detections.size(); ++d) {
                Slot& slot = slots[assign[d]];
                const Detection& det = proposals.detections[d];
                Var row = detection_row_const(det);
                slot.state = detach(ad::lstm_step(slot.state, model.lstm_input(row), model.lstm()));
                slot.last_sigma = det.sigma;
                slot.last_frame = int(f);
                fp.persons.push_back(decode_person(model, slot.state.h, det, slot.id));
            }
            // drop slots unseen for a full window
            std::erase_if(slots, [&](const Slot& s) {
                return s.last_frame >= 0 && int(f) - s.last_frame > cfg.window;
            });
        }
        out.push_back(std::move(fp));
        if (frame_seconds)
            frame_seconds->push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    }
    return out;
}

}  // namespace rfpose
