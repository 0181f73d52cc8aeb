#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "rfpose/errors.hpp"
#include "rfpose/pipeline.hpp"

using namespace rfpose;

namespace {

RunConfig resolve_config(const std::string& config_path, const CliOverrides& ov) {
    RunConfig cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.train.seed = *ov.seed;
    }
    if (ov.total) cfg.dataset.total = *ov.total;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    if (const char* tn = std::getenv("RFPOSE_THREADS")) {
        int n = std::atoi(tn);
        if (n > 0) omp_set_num_threads(n);
    }
#endif

    CLI::App app{"through-obstruction RF pose workbench"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dataset_dir, checkpoint, sequence, mode_str = "many2many";
    std::string ablation_ckpt;
    std::optional<uint64_t> seed;
    std::optional<int> total;
    bool oracle_as_model = false;
    int bench_frames = 200;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--seed", seed, "override the config seed");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen);
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--total", total, "override total sequence count");

    CLI::App* train_cmd = app.add_subcommand("train", "train the pose decoder");
    add_common(train_cmd);
    train_cmd->add_option("--dataset", dataset_dir, "dataset directory")->required();
    train_cmd->add_option("--out", out_dir, "output run directory")->required();

    CLI::App* ablate = app.add_subcommand("ablate", "fine-tune the frame-by-frame ablation");
    add_common(ablate);
    ablate->add_option("--checkpoint", checkpoint, "base checkpoint")->required();
    ablate->add_option("--dataset", dataset_dir, "dataset directory")->required();
    ablate->add_option("--out", out_dir, "output run directory")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "run the evaluation suite");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--dataset", dataset_dir, "dataset directory")->required();
    eval_cmd->add_option("--out", out_dir, "output report directory")->required();
    eval_cmd->add_option("--mode", mode_str, "many2many|framewise");
    eval_cmd->add_option("--ablation-checkpoint", ablation_ckpt,
                         "framewise checkpoint for the comparison section");
    eval_cmd->add_flag("--oracle-as-model", oracle_as_model,
                       "pipe ground truth through as predictions (harness check)");

    CLI::App* bench = app.add_subcommand("bench", "measure per-frame inference latency");
    add_common(bench);
    bench->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    bench->add_option("--dataset", dataset_dir, "dataset directory")->required();
    bench->add_option("--frames", bench_frames, "max frames to time");

    CLI::App* render = app.add_subcommand("render", "render per-frame overlays");
    add_common(render);
    render->add_option("--checkpoint", checkpoint, "model checkpoint (optional)");
    render->add_option("--dataset", dataset_dir, "dataset directory")->required();
    render->add_option("--sequence", sequence, "sequence name, e.g. seq_0003")->required();
    render->add_option("--out", out_dir, "output image directory")->required();
    render->add_option("--mode", mode_str, "many2many|framewise");

    CLI11_PARSE(app, argc, argv);

    try {
        CliOverrides ov{seed, total, std::nullopt};
        RunConfig cfg = resolve_config(config_path, ov);
        if (gen->parsed()) {
            cmd_gen(cfg, out_dir);
            std::cerr << "dataset written to " << out_dir << "\n";
        } else if (train_cmd->parsed()) {
            cmd_train(cfg, dataset_dir, out_dir);
            std::cerr << "checkpoint + report written to " << out_dir << "\n";
        } else if (ablate->parsed()) {
            cmd_ablate(cfg, checkpoint, dataset_dir, out_dir);
            std::cerr << "ablation checkpoint written to " << out_dir << "\n";
        } else if (eval_cmd->parsed()) {
            std::optional<std::string> ab;
            if (!ablation_ckpt.empty()) ab = ablation_ckpt;
            cmd_eval(cfg, checkpoint, dataset_dir, out_dir, infer_mode_from_string(mode_str), ab,
                     oracle_as_model);
            std::cerr << "evaluation report written to " << out_dir << "\n";
        } else if (bench->parsed()) {
            std::string summary;
            cmd_bench(cfg, checkpoint, dataset_dir, bench_frames, summary);
            std::cout << summary;
        } else if (render->parsed()) {
            cmd_render(cfg, checkpoint, dataset_dir, sequence, out_dir,
                       infer_mode_from_string(mode_str));
            std::cerr << "overlays written to " << out_dir << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
