#pragma once

#include <optional>
#include <string>

#include "rfpose/dataset.hpp"
#include "rfpose/decoder.hpp"
#include "rfpose/evaluate.hpp"
#include "rfpose/train.hpp"

#include "json.hpp"

namespace rfpose {

// Aggregated run configuration; every numeric default lives here so a run is
// reproducible from its echoed manifest alone.
struct RunConfig {
    uint64_t seed = 1;
    Frontend frontend;
    DatasetSpec dataset;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;
    std::vector<Material> eval_media = {Material::paper_board, Material::plastic,
                                        Material::drywall, Material::wood, Material::brick,
                                        Material::concrete};
    double eval_medium_thickness = 0.04;
    int eval_max_sequences = 0;

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Defaults overlaid with the file; unknown keys are rejected.
RunConfig load_run_config(const std::string& path);
RunConfig default_run_config();

struct CliOverrides {
    std::optional<uint64_t> seed;
    std::optional<int> total;
    std::optional<std::string> mode;
};

// Subcommand bodies. They throw ConfigError for validation problems and
// std::runtime_error for runtime failures; the CLI maps these to exit codes.
void cmd_gen(const RunConfig& cfg, const std::string& out_dir);
void cmd_train(const RunConfig& cfg, const std::string& dataset_dir, const std::string& out_dir);
void cmd_ablate(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& dataset_dir, const std::string& out_dir);
void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const std::string& dataset_dir,
              const std::string& out_dir, InferMode mode,
              const std::optional<std::string>& ablation_checkpoint, bool oracle_as_model);
void cmd_bench(const RunConfig& cfg, const std::string& checkpoint,
               const std::string& dataset_dir, int max_frames, std::string& summary_out);
void cmd_render(const RunConfig& cfg, const std::string& checkpoint,
                const std::string& dataset_dir, const std::string& sequence,
                const std::string& out_dir, InferMode mode);

}  // namespace rfpose
