#include "rfpose/checkpoint.hpp"

#include <fstream>

#include "rfpose/errors.hpp"

using nlohmann::json;

namespace rfpose {

json model_config_to_json(const ModelConfig& c) {
    return json{{"heat_h", c.heat_h},
                {"heat_w", c.heat_w},
                {"base_channels", c.base_channels},
                {"num_blocks", c.num_blocks},
                {"p_max", c.p_max},
                {"classes_x", c.classes_x},
                {"classes_y", c.classes_y},
                {"lstm_hidden", c.lstm_hidden},
                {"key_dim", c.key_dim},
                {"window", c.window},
                {"lambda_track", c.lambda_track},
                {"objectness_threshold", c.objectness_threshold},
                {"anchor_w", c.anchor_w},
                {"anchor_h", c.anchor_h},
                {"track_margin", c.track_margin},
                {"delta_cap", c.delta_cap},
                {"iou_match", c.iou_match},
                {"obj_pos_weight", c.obj_pos_weight},
                {"obj_neg_weight", c.obj_neg_weight}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.heat_h = j.at("heat_h").get<int>();
    c.heat_w = j.at("heat_w").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.num_blocks = j.at("num_blocks").get<int>();
    c.p_max = j.at("p_max").get<int>();
    c.classes_x = j.at("classes_x").get<int>();
    c.classes_y = j.at("classes_y").get<int>();
    c.lstm_hidden = j.at("lstm_hidden").get<int>();
    c.key_dim = j.at("key_dim").get<int>();
    c.window = j.at("window").get<int>();
    c.lambda_track = j.at("lambda_track").get<float>();
    c.objectness_threshold = j.at("objectness_threshold").get<float>();
    c.anchor_w = j.at("anchor_w").get<float>();
    c.anchor_h = j.at("anchor_h").get<float>();
    c.track_margin = j.at("track_margin").get<float>();
    c.delta_cap = j.at("delta_cap").get<float>();
    c.iou_match = j.at("iou_match").get<float>();
    c.obj_pos_weight = j.at("obj_pos_weight").get<float>();
    c.obj_neg_weight = j.at("obj_neg_weight").get<float>();
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json header;
    header["format"] = "rfpose-checkpoint-v1";
    header["model"] = model_config_to_json(ck.model_config);
    header["default_mode"] = ck.default_mode;
    header["extra"] = ck.extra;
    json tensors = json::array();
    tensors.push_back({{"name", "params"}, {"shape", {ck.params.size()}}});
    if (ck.has_adam) {
        header["adam"] = {{"t", ck.adam_t},
                          {"lr", ck.adam_config.lr},
                          {"beta1", ck.adam_config.beta1},
                          {"beta2", ck.adam_config.beta2},
                          {"eps", ck.adam_config.eps}};
        tensors.push_back({{"name", "adam.m"}, {"shape", {ck.adam_m.size()}}});
        tensors.push_back({{"name", "adam.v"}, {"shape", {ck.adam_v.size()}}});
    }
    header["tensors"] = tensors;

    std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f.write("RFCK", 4);
    uint32_t len = uint32_t(hs.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(hs.data(), std::streamsize(hs.size()));
    auto dump = [&](const std::vector<float>& v) {
        f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(4 * v.size()));
    };
    dump(ck.params);
    if (ck.has_adam) {
        dump(ck.adam_m);
        dump(ck.adam_v);
    }
    if (!f) throw std::runtime_error("short checkpoint write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("no checkpoint at " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "RFCK") throw ConfigError("bad checkpoint magic in " + path);
    uint32_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 4);
    std::string hs(len, '\0');
    f.read(hs.data(), len);
    json header = json::parse(hs);
    if (header.value("format", "") != "rfpose-checkpoint-v1")
        throw ConfigError("unrecognized checkpoint format in " + path);

    Checkpoint ck;
    ck.model_config = model_config_from_json(header.at("model"));
    ck.default_mode = header.value("default_mode", "many2many");
    ck.extra = header.value("extra", json::object());
    auto read_tensor = [&](size_t n) {
        std::vector<float> v(n);
        f.read(reinterpret_cast<char*>(v.data()), std::streamsize(4 * n));
        return v;
    };
    for (const json& t : header.at("tensors")) {
        std::string name = t.at("name").get<std::string>();
        size_t n = t.at("shape").at(0).get<size_t>();
        if (name == "params")
            ck.params = read_tensor(n);
        else if (name == "adam.m")
            ck.adam_m = read_tensor(n);
        else if (name == "adam.v")
            ck.adam_v = read_tensor(n);
        else
            throw std::runtime_error("unknown tensor '" + name + "' in " + path);
    }
    if (header.contains("adam")) {
        ck.has_adam = true;
        const json& a = header.at("adam");
        ck.adam_t = a.at("t").get<int64_t>();
        ck.adam_config.lr = a.at("lr").get<float>();
        ck.adam_config.beta1 = a.at("beta1").get<float>();
        ck.adam_config.beta2 = a.at("beta2").get<float>();
        ck.adam_config.eps = a.at("eps").get<float>();
    }
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    return ck;
}

std::vector<float> narrow_f32(const std::vector<ad::real>& v) {
    return std::vector<float>(v.begin(), v.end());
}

std::vector<ad::real> widen_real(const std::vector<float>& v) {
    return std::vector<ad::real>(v.begin(), v.end());
}

std::unique_ptr<PoseModel> model_from_checkpoint(const Checkpoint& ck) {
    auto model = std::make_unique<PoseModel>(ck.model_config, 0);
    model->set_flat_values(widen_real(ck.params));
    return model;
}

}  // namespace rfpose
