#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rfpose/scene.hpp"

namespace rfpose {

constexpr double kSpeedOfLight = 2.998e8;  // m/s

struct GridAxis {
    double lo = 0.0, hi = 1.0;
    int steps = 2;

    double spacing() const { return (hi - lo) / steps; }
    double center(int i) const { return lo + (i + 0.5) * spacing(); }
};

struct RadarConfig {
    double f_min = 3.3e9;        // Hz
    double f_max = 10.0e9;       // Hz
    double chirp_slope = 5e13;   // Hz/s
    int n_tx = 16;
    double spacing = 0.0225;     // m between adjacent antennas
    GridAxis theta{-70.0 * kDegree, 70.0 * kDegree, 32};
    GridAxis phi{-56.0 * kDegree, 56.0 * kDegree, 32};
    GridAxis range{0.5, 5.5, 64};
    double noise_floor = 0.0;    // relative power added per voxel
    double power_scale = 1000.0; // overall reflected-power scale
    double lobe_exponent = 8.0;  // specular lobe sharpness q
    double visibility_eps = 0.05;

    double bandwidth() const { return f_max - f_min; }
    double center_wavelength() const { return kSpeedOfLight / (0.5 * (f_min + f_max)); }
    void validate() const;
};

// Reflected power R(theta, phi, r) on the spherical grid; values are power
// density per m^3, nonnegative and finite.
struct RFVolume {
    GridAxis theta, phi, range;
    std::vector<float> power;  // [theta][phi][r]

    size_t index(int it, int ip, int ir) const {
        return (size_t(it) * phi.steps + ip) * range.steps + ir;
    }
    float at(int it, int ip, int ir) const { return power[index(it, ip, ir)]; }
    // Exact physical volume of voxel (it, *, ir); the Jacobian is r^2 cos(theta).
    double voxel_volume(int it, int ir) const;
    double total() const;  // plain sum of density values
    double mass() const;   // volume-weighted integral
};

double range_resolution(const RadarConfig& config);
double angular_resolution(const RadarConfig& config);
double beat_to_delay(double delta_f, const RadarConfig& config);
double delay_to_range(double delta_t);

// Two-way is applied at the simulation site; this returns the one-way
// power pass-through factor in (0, 1].
double medium_attenuation(const MediumSpec& medium);
// dB per cm of material; table is overridable for experiments.
double material_db_per_cm(Material m);
void set_material_db_per_cm(Material m, double db_per_cm);

// Specular lobe term max(0, -u.n)^q for a patch seen from the origin.
double specular_lobe(const Vec3& position, const Vec3& normal, double q);
bool patch_visible(const Vec3& position, const Vec3& normal, const RadarConfig& config);

struct SimulationResult {
    RFVolume volume;
    std::vector<std::string> warnings;  // skipped persons etc.
};

// Specular FMCW sensing of one frame. Deterministic in (frame, config, seed).
SimulationResult simulate_frame(const SceneFrame& frame, const RadarConfig& config,
                                uint64_t noise_seed);

}  // namespace rfpose
