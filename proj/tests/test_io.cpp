#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rfpose/checkpoint.hpp"
#include "rfpose/rng.hpp"
#include "rfpose/tensor_io.hpp"

using namespace rfpose;
namespace fs = std::filesystem;

TEST_CASE("tensor files round trip exactly") {
    fs::path dir = fs::temp_directory_path() / "rfpose_io_test";
    fs::create_directories(dir);
    Rng rng(123);
    for (int trial = 0; trial < 8; ++trial) {
        TensorFile t;
        int rank = 1 + rng.uniform_int(3);
        for (int d = 0; d < rank; ++d) t.shape.push_back(uint32_t(1 + rng.uniform_int(9)));
        t.data.resize(t.count());
        for (float& v : t.data) v = float(rng.uniform(-1e5, 1e5));
        std::string path = (dir / ("t" + std::to_string(trial) + ".rft")).string();
        write_tensor(path, t);
        TensorFile r = read_tensor(path);
        CHECK(r.shape == t.shape);
        REQUIRE(r.data.size() == t.data.size());
        for (size_t i = 0; i < t.data.size(); ++i) CHECK(r.data[i] == t.data[i]);
    }
    CHECK_THROWS(read_tensor((dir / "missing.rft").string()));
    fs::remove_all(dir);
}

TEST_CASE("checkpoints round trip model and optimizer state") {
    fs::path dir = fs::temp_directory_path() / "rfpose_ckpt_test";
    fs::create_directories(dir);

    ModelConfig cfg;
    cfg.heat_h = cfg.heat_w = 32;
    cfg.base_channels = 3;
    cfg.num_blocks = 2;
    cfg.classes_x = cfg.classes_y = 16;
    cfg.lstm_hidden = 8;
    cfg.key_dim = 6;
    PoseModel model(cfg, 99);

    Checkpoint ck;
    ck.model_config = cfg;
    ck.default_mode = "many2many";
    ck.params = narrow_f32(model.flat_values());
    ck.has_adam = true;
    ck.adam_config.lr = 5e-4f;
    ck.adam_t = 321;
    ck.adam_m.assign(ck.params.size(), 0.25f);
    ck.adam_v.assign(ck.params.size(), 0.5f);
    ck.extra["note"] = "round trip";

    std::string path = (dir / "model.rfck").string();
    save_checkpoint(path, ck);
    Checkpoint r = load_checkpoint(path);
    CHECK(r.default_mode == "many2many");
    CHECK(r.model_config.lstm_hidden == cfg.lstm_hidden);
    CHECK(r.params == ck.params);
    CHECK(r.has_adam);
    CHECK(r.adam_t == 321);
    CHECK(r.adam_config.lr == doctest::Approx(5e-4));
    CHECK(r.adam_m == ck.adam_m);
    CHECK(r.adam_v == ck.adam_v);
    CHECK(r.extra.at("note") == "round trip");

    // rebuilt model reproduces the exact parameter vector
    auto rebuilt = model_from_checkpoint(r);
    CHECK(rebuilt->flat_values() == widen_real(narrow_f32(model.flat_values())));

    // corrupt magic is rejected
    {
        std::ofstream f(dir / "bad.rfck", std::ios::binary);
        f << "NOPE0000";
    }
    CHECK_THROWS(load_checkpoint((dir / "bad.rfck").string()));
    fs::remove_all(dir);
}
