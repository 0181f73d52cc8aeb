#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "rfpose/dataset.hpp"
#include "rfpose/errors.hpp"

using namespace rfpose;
namespace fs = std::filesystem;

namespace {

// small grids keep the sensing cheap in tests
Frontend tiny_frontend() {
    Frontend fe;
    fe.radar.theta.steps = 16;
    fe.radar.phi.steps = 16;
    fe.radar.range.steps = 32;
    fe.grid.x.steps = 32;
    fe.grid.y.steps = 32;
    fe.grid.z.steps = 32;
    return fe;
}

DatasetSpec tiny_spec(int total) {
    DatasetSpec spec;
    spec.total = total;
    spec.fps = 4.0;
    spec.duration_s = 1.0;
    return spec;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("largest-remainder apportionment") {
    // the shipped category table scales 1500 total by exactly 1/50
    std::vector<double> weights;
    for (const CategorySpec& c : default_categories()) weights.push_back(c.weight);
    auto counts = apportion(1500, weights);
    std::vector<int> expected = {75, 375, 225, 75, 150, 75, 225, 150, 75, 75};
    CHECK(counts == expected);

    auto split = apportion(100, {0.75, 0.05, 0.20});
    CHECK(split == std::vector<int>{75, 5, 20});

    // sums always match the total
    for (int total : {20, 21, 33, 97}) {
        auto c = apportion(total, weights);
        int sum = 0;
        for (int v : c) sum += v;
        CHECK(sum == total);
    }
}

TEST_CASE("make_dataset writes a coherent, split-exact dataset") {
    TempDir tmp("rfpose_ds_test");
    Manifest man = make_dataset(tiny_spec(24), tiny_frontend(), 42, tmp.path.string());

    CHECK(man.sequences.size() == 24);
    std::map<std::string, int> splits;
    for (const SequenceMeta& m : man.sequences) splits[m.split]++;
    CHECK(splits["train"] == 18);  // largest remainder of 24 * (.75, .05, .20)
    CHECK(splits["val"] == 1);
    CHECK(splits["test"] == 5);

    // structure on disk: manifest + per-sequence dirs with frames and labels
    CHECK(fs::exists(tmp.path / "manifest.json"));
    for (const SequenceMeta& m : man.sequences) {
        CHECK(fs::exists(tmp.path / m.name / "labels.json"));
        CHECK(fs::exists(tmp.path / m.name / "frame_0000.rft"));
    }

    // labels pass the ground-truth invariants
    Manifest loaded = load_manifest(tmp.path.string());
    CHECK(loaded.sequences.size() == man.sequences.size());
    for (const SequenceMeta& m : loaded.sequences) {
        LoadedSequence seq = load_sequence(loaded, m);
        CHECK(int(seq.frames.size()) == m.frames);
        for (const TruthFrame& tf : seq.labels)
            for (const TruthPerson& tp : tf.persons) {
                CHECK(tp.box[2] > 0.0);
                CHECK(tp.box[3] > 0.0);
                for (const auto& kp : tp.keypoints) {
                    CHECK(kp.alpha >= 0);
                    CHECK(kp.alpha < 64);
                    CHECK(kp.beta >= 0);
                    CHECK(kp.beta < 64);
                    CHECK(kp.confidence >= 0.0);
                    CHECK(kp.confidence <= 1.0);
                }
            }
        if (m.persons == 0)
            for (const TruthFrame& tf : seq.labels) CHECK(tf.persons.empty());
    }
}

TEST_CASE("datasets are byte-identical across runs with the same spec and seed") {
    TempDir a("rfpose_ds_det_a"), b("rfpose_ds_det_b");
    make_dataset(tiny_spec(20), tiny_frontend(), 7, a.path.string());
    make_dataset(tiny_spec(20), tiny_frontend(), 7, b.path.string());

    CHECK(read_file(a.path / "manifest.json") == read_file(b.path / "manifest.json"));
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), a.path);
        CHECK(read_file(entry.path()) == read_file(b.path / rel));
    }
    // and a different seed actually changes the data
    TempDir c("rfpose_ds_det_c");
    make_dataset(tiny_spec(20), tiny_frontend(), 8, c.path.string());
    CHECK(read_file(a.path / "manifest.json") != read_file(c.path / "manifest.json"));
}

TEST_CASE("degenerate totals are refused") {
    TempDir tmp("rfpose_ds_refuse");
    CHECK_THROWS_AS(make_dataset(tiny_spec(19), tiny_frontend(), 1, tmp.path.string()),
                    ConfigError);
}

TEST_CASE("category proportions respect the weights within rounding") {
    TempDir tmp("rfpose_ds_prop");
    DatasetSpec spec = tiny_spec(50);
    Manifest man = make_dataset(spec, tiny_frontend(), 3, tmp.path.string());
    std::map<std::string, int> by_cat;
    for (const SequenceMeta& m : man.sequences) by_cat[m.category]++;
    double wsum = 0.0;
    for (const CategorySpec& c : spec.categories) wsum += c.weight;
    for (const CategorySpec& c : spec.categories) {
        double exact = 50.0 * c.weight / wsum;
        CHECK(std::abs(by_cat[c.name] - exact) <= 1.0);
    }
    // occluded sequences carry non-air media from the list
    for (const SequenceMeta& m : man.sequences) {
        if (m.occluded) {
            CHECK(m.material != Material::air);
            CHECK(m.thickness > 0.0);
        } else {
            CHECK(m.material == Material::air);
        }
    }
}
