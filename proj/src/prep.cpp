#include "rfpose/prep.hpp"

#include <algorithm>
#include <cmath>

#include "rfpose/errors.hpp"

namespace rfpose {

double CartesianVolume::total() const {
    double acc = 0.0;
    for (float v : power) acc += v;
    return acc;
}

double CartesianVolume::mass() const {
    return total() * grid.x.spacing() * grid.y.spacing() * grid.z.spacing();
}

namespace {

// fractional grid coordinate of a physical value, relative to voxel centers
inline double frac_index(const GridAxis& ax, double v) {
    return (v - ax.lo) / ax.spacing() - 0.5;
}

inline float sample_trilinear(const RFVolume& vol, double ft, double fp, double fr) {
    auto split = [](double f, int steps, int& i0, double& w) {
        // clamp to the center span; outside-center values extend the edge voxel
        f = std::clamp(f, 0.0, double(steps - 1));
        i0 = std::min(int(f), steps - 2 >= 0 ? steps - 2 : 0);
        w = f - i0;
    };
    int t0, p0, r0;
    double wt, wp, wr;
    split(ft, vol.theta.steps, t0, wt);
    split(fp, vol.phi.steps, p0, wp);
    split(fr, vol.range.steps, r0, wr);
    double acc = 0.0;
    for (int dt = 0; dt < 2; ++dt)
        for (int dp = 0; dp < 2; ++dp)
            for (int dr = 0; dr < 2; ++dr) {
                double w = (dt ? wt : 1.0 - wt) * (dp ? wp : 1.0 - wp) * (dr ? wr : 1.0 - wr);
                acc += w * vol.at(t0 + dt, p0 + dp, r0 + dr);
            }
    return float(acc);
}

inline float sample_nearest(const RFVolume& vol, double ft, double fp, double fr) {
    auto nearest = [](double f, int steps) {
        return std::clamp(int(std::lround(f)), 0, steps - 1);
    };
    return vol.at(nearest(ft, vol.theta.steps), nearest(fp, vol.phi.steps),
                  nearest(fr, vol.range.steps));
}

}  // namespace

CartesianVolume resample_volume(const RFVolume& vol, const CartesianGrid& grid, Interp interp) {
    CartesianVolume out;
    out.grid = grid;
    out.power.assign(size_t(grid.x.steps) * grid.y.steps * grid.z.steps, 0.0f);

    for (int ix = 0; ix < grid.x.steps; ++ix) {
        double x = grid.x.center(ix);
        for (int iy = 0; iy < grid.y.steps; ++iy) {
            double y = grid.y.center(iy);
            for (int iz = 0; iz < grid.z.steps; ++iz) {
                double z = grid.z.center(iz);
                Spherical s = cartesian_to_spherical({x, y, z});
                if (s.theta < vol.theta.lo || s.theta > vol.theta.hi)
                    throw ConfigError("resample: theta " + std::to_string(s.theta / kDegree) +
                                      " deg at cartesian voxel outside spherical coverage");
                if (s.phi < vol.phi.lo || s.phi > vol.phi.hi)
                    throw ConfigError("resample: phi " + std::to_string(s.phi / kDegree) +
                                      " deg at cartesian voxel outside spherical coverage");
                if (s.r < vol.range.lo || s.r > vol.range.hi)
                    throw ConfigError("resample: range " + std::to_string(s.r) +
                                      " m at cartesian voxel outside spherical coverage");
                double ft = frac_index(vol.theta, s.theta);
                double fp = frac_index(vol.phi, s.phi);
                double fr = frac_index(vol.range, s.r);
                out.power[out.index(ix, iy, iz)] = interp == Interp::trilinear
                                                       ? sample_trilinear(vol, ft, fp, fr)
                                                       : sample_nearest(vol, ft, fp, fr);
            }
        }
    }
    return out;
}

HeatmapPair project_heatmaps(const CartesianVolume& vol, bool normalize) {
    const CartesianGrid& g = vol.grid;
    HeatmapPair maps;
    maps.width = g.x.steps;
    maps.height_horz = g.z.steps;
    maps.height_vert = g.y.steps;
    maps.x_axis = g.x;
    maps.y_axis = g.y;
    maps.z_axis = g.z;
    maps.horz.assign(size_t(g.z.steps) * g.x.steps, 0.0f);
    maps.vert.assign(size_t(g.y.steps) * g.x.steps, 0.0f);

    for (int ix = 0; ix < g.x.steps; ++ix)
        for (int iz = 0; iz < g.z.steps; ++iz) {
            double acc = 0.0;
            for (int iy = 0; iy < g.y.steps; ++iy) acc += vol.at(ix, iy, iz);
            // row 0 holds the farthest z so the top-down view reads top = far
            int row = g.z.steps - 1 - iz;
            maps.horz[size_t(row) * maps.width + ix] = float(acc);
        }
    for (int ix = 0; ix < g.x.steps; ++ix)
        for (int iy = 0; iy < g.y.steps; ++iy) {
            double acc = 0.0;
            for (int iz = 0; iz < g.z.steps; ++iz) acc += vol.at(ix, iy, iz);
            int row = g.y.steps - 1 - iy;  // row 0 = top
            maps.vert[size_t(row) * maps.width + ix] = float(acc);
        }

    if (normalize) {
        for (std::vector<float>* m : {&maps.horz, &maps.vert}) {
            float mx = 0.0f;
            for (float v : *m) mx = std::max(mx, v);
            if (mx > 0.0f)
                for (float& v : *m) v /= mx;
        }
    }
    return maps;
}

}  // namespace rfpose
