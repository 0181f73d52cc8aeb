#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace rfpose {

// Deterministic PRNG with explicit distribution code so that generated
// streams are identical across platforms and standard-library versions.
// Core generator is splitmix64.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Derives an independent stream seed, e.g. per frame or per sequence.
    static uint64_t derive(uint64_t seed, uint64_t salt) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) { return n <= 1 ? 0 : int(next_u64() % uint64_t(n)); }

    double normal() {
        // Box-Muller, one value per call; the pair's second half is dropped
        // to keep the stream position independent of call history.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double exponential() {
        double u = uniform();
        return -std::log(1.0 - u);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace rfpose
