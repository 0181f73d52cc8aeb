#pragma once

#include <memory>
#include <string>

#include "rfpose/decoder.hpp"

#include "json.hpp"

namespace rfpose {

// Checkpoint file layout, little-endian:
//   magic "RFCK" | u32 header_len | header JSON (UTF-8) | tensor payloads
// The header lists every tensor (name, shape) in payload order and carries
// the model hyperparameters plus Adam moment metadata.
struct Checkpoint {
    ModelConfig model_config;
    std::string default_mode = "many2many";  // inference mode this was trained for
    std::vector<float> params;               // flat, registry order
    bool has_adam = false;
    ad::AdamConfig adam_config;
    int64_t adam_t = 0;
    std::vector<float> adam_m, adam_v;
    nlohmann::json extra;  // run provenance
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& cfg);

// graph scalars are double in memory; checkpoints store f32 payloads
std::vector<float> narrow_f32(const std::vector<ad::real>& v);
std::vector<ad::real> widen_real(const std::vector<float>& v);

// Rebuilds the model with checkpointed weights.
std::unique_ptr<PoseModel> model_from_checkpoint(const Checkpoint& ck);

}  // namespace rfpose
