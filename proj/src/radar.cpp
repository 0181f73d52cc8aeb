#include "rfpose/radar.hpp"

#include <algorithm>
#include <cmath>

#include "rfpose/errors.hpp"
#include "rfpose/rng.hpp"

namespace rfpose {

void RadarConfig::validate() const {
    if (!(f_min > 0.0) || !(f_max > f_min))
        throw ConfigError("radar: need f_max > f_min > 0");
    if (!(chirp_slope > 0.0)) throw ConfigError("radar: chirp slope must be > 0");
    if (n_tx < 1) throw ConfigError("radar: n_tx must be >= 1");
    if (!(spacing > 0.0)) throw ConfigError("radar: antenna spacing must be > 0");
    for (const GridAxis* ax : {&theta, &phi, &range})
        if (ax->steps < 2 || !(ax->hi > ax->lo))
            throw ConfigError("radar: each grid axis needs >= 2 steps and hi > lo");
    if (noise_floor < 0.0) throw ConfigError("radar: noise floor must be >= 0");
}

double RFVolume::voxel_volume(int it, int ir) const {
    double t0 = theta.lo + it * theta.spacing();
    double t1 = t0 + theta.spacing();
    double r0 = range.lo + ir * range.spacing();
    double r1 = r0 + range.spacing();
    return phi.spacing() * (std::sin(t1) - std::sin(t0)) * (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
}

double RFVolume::total() const {
    double acc = 0.0;
    for (float v : power) acc += v;
    return acc;
}

double RFVolume::mass() const {
    double acc = 0.0;
    for (int it = 0; it < theta.steps; ++it)
        for (int ir = 0; ir < range.steps; ++ir) {
            double vv = voxel_volume(it, ir);
            for (int ip = 0; ip < phi.steps; ++ip) acc += double(at(it, ip, ir)) * vv;
        }
    return acc;
}

double range_resolution(const RadarConfig& config) {
    config.validate();
    return kSpeedOfLight / (2.0 * config.bandwidth());
}

double angular_resolution(const RadarConfig& config) {
    config.validate();
    return 0.886 * config.center_wavelength() / (config.n_tx * config.spacing);
}

double beat_to_delay(double delta_f, const RadarConfig& config) {
    if (!(config.chirp_slope > 0.0)) throw ConfigError("beat_to_delay: chirp slope must be > 0");
    if (delta_f < 0.0) throw ConfigError("beat_to_delay: beat frequency must be >= 0");
    return delta_f / config.chirp_slope;
}

double delay_to_range(double delta_t) { return kSpeedOfLight * delta_t / 2.0; }

namespace {
// dB/cm by material, ordered by dielectric constant. Simulation parameters,
// not physical claims.
std::map<Material, double>& attenuation_table() {
    static std::map<Material, double> table = {
        {Material::air, 0.0},        {Material::fog, 0.05},      {Material::leaves, 0.10},
        {Material::carpet, 0.12},    {Material::insulation, 0.15}, {Material::paper_board, 0.20},
        {Material::linoleum, 0.25},  {Material::plastic, 0.30},  {Material::drywall, 0.50},
        {Material::wood, 0.80},      {Material::brick, 1.50},    {Material::concrete, 3.00}};
    return table;
}
}  // namespace

double material_db_per_cm(Material m) {
    auto it = attenuation_table().find(m);
    if (it == attenuation_table().end())
        throw ConfigError("no attenuation coefficient for material " + material_name(m));
    return it->second;
}

void set_material_db_per_cm(Material m, double db_per_cm) {
    if (db_per_cm < 0.0) throw ConfigError("attenuation coefficient must be >= 0");
    attenuation_table()[m] = db_per_cm;
}

double medium_attenuation(const MediumSpec& medium) {
    if (medium.thickness < 0.0) throw ConfigError("medium thickness must be >= 0");
    if (medium.material == Material::air) return 1.0;
    double db = material_db_per_cm(medium.material) * medium.thickness * 100.0;
    return std::pow(10.0, -db / 10.0);
}

double specular_lobe(const Vec3& position, const Vec3& normal, double q) {
    Vec3 u = position.normalized();
    double facing = -u.dot(normal);
    return facing > 0.0 ? std::pow(facing, q) : 0.0;
}

bool patch_visible(const Vec3& position, const Vec3& normal, const RadarConfig& config) {
    return specular_lobe(position, normal, config.lobe_exponent) >= config.visibility_eps;
}

namespace {

// Fraction of a unit Gaussian inside [a, b].
inline double gauss_mass(double a, double b, double mu, double sigma) {
    double inv = 1.0 / (sigma * 1.4142135623730951);
    return 0.5 * (std::erf((b - mu) * inv) - std::erf((a - mu) * inv));
}

// Deposits `amount` of total power around (mu_t, mu_p, mu_r): per-axis
// Gaussian mass is integrated over voxel extents and stored as density.
// Mass outside the grid is lost, matching a reflector near the edge of
// coverage.
void deposit(RFVolume& vol, double mu_t, double mu_p, double mu_r, double s_t, double s_p,
             double s_r, double amount) {
    auto window = [](const GridAxis& ax, double mu, double sigma, int& i0, int& i1) {
        double span = std::max(4.0 * sigma, 2.0 * ax.spacing());
        i0 = std::max(0, int(std::floor((mu - span - ax.lo) / ax.spacing())));
        i1 = std::min(ax.steps - 1, int(std::ceil((mu + span - ax.lo) / ax.spacing())));
    };
    int t0, t1, p0, p1, r0, r1;
    window(vol.theta, mu_t, s_t, t0, t1);
    window(vol.phi, mu_p, s_p, p0, p1);
    window(vol.range, mu_r, s_r, r0, r1);
    if (t0 > t1 || p0 > p1 || r0 > r1) return;

    auto axis_masses = [](const GridAxis& ax, double mu, double sigma, int i0, int i1) {
        std::vector<double> m(size_t(i1 - i0 + 1));
        for (int i = i0; i <= i1; ++i)
            m[i - i0] = gauss_mass(ax.lo + i * ax.spacing(), ax.lo + (i + 1) * ax.spacing(), mu,
                                   sigma);
        return m;
    };
    std::vector<double> mt = axis_masses(vol.theta, mu_t, s_t, t0, t1);
    std::vector<double> mp = axis_masses(vol.phi, mu_p, s_p, p0, p1);
    std::vector<double> mr = axis_masses(vol.range, mu_r, s_r, r0, r1);

    for (int it = t0; it <= t1; ++it)
        for (int ip = p0; ip <= p1; ++ip) {
            double w_tp = amount * mt[it - t0] * mp[ip - p0];
            if (w_tp == 0.0) continue;
            float* row = vol.power.data() + vol.index(it, ip, 0);
            for (int ir = r0; ir <= r1; ++ir)
                row[ir] += float(w_tp * mr[ir - r0] / vol.voxel_volume(it, ir));
        }
}

struct Patch {
    Vec3 position;
    Vec3 normal;
    double area;
    int person = -1;  // -1 for clutter
};

}  // namespace

SimulationResult simulate_frame(const SceneFrame& frame, const RadarConfig& config,
                                uint64_t noise_seed) {
    config.validate();
    SimulationResult res;
    RFVolume& vol = res.volume;
    vol.theta = config.theta;
    vol.phi = config.phi;
    vol.range = config.range;
    vol.power.assign(size_t(config.theta.steps) * config.phi.steps * config.range.steps, 0.0f);

    std::vector<Patch> patches;
    for (const Skeleton& sk : frame.persons) {
        bool inside = true;
        for (const KeypointPatch& kp : sk.keypoints) {
            Spherical s = cartesian_to_spherical(kp.position);
            if (s.theta < config.theta.lo || s.theta > config.theta.hi || s.phi < config.phi.lo ||
                s.phi > config.phi.hi || s.r < config.range.lo || s.r > config.range.hi) {
                inside = false;
                break;
            }
        }
        if (!inside) {
            res.warnings.push_back("person " + std::to_string(sk.identity) +
                                   " outside grid extents; skipped");
            continue;
        }
        for (const KeypointPatch& kp : sk.keypoints)
            patches.push_back({kp.position, kp.normal, kp.area, sk.identity});
    }
    for (const Reflector& rf : frame.clutter)
        patches.push_back({rf.position, rf.normal, rf.area, -1});

    double att = medium_attenuation(frame.medium);
    double att_two_way = att * att;
    double sigma_ang = 0.5 * angular_resolution(config);
    double sigma_r = 0.5 * range_resolution(config);

    for (const Patch& p : patches) {
        double lobe = specular_lobe(p.position, p.normal, config.lobe_exponent);
        if (lobe < config.visibility_eps) continue;  // specular dropout
        Spherical s = cartesian_to_spherical(p.position);
        if (s.r < config.range.lo || s.r > config.range.hi) continue;
        double r4 = s.r * s.r * s.r * s.r;
        double amount = config.power_scale * p.area * lobe * att_two_way / r4;
        deposit(vol, s.theta, s.phi, s.r, sigma_ang, sigma_ang, sigma_r, amount);
    }

    if (config.noise_floor > 0.0) {
        Rng rng(Rng::derive(noise_seed, 0x4015e));
        for (float& v : vol.power) v += float(config.noise_floor * rng.exponential());
    }
    return res;
}

}  // namespace rfpose
