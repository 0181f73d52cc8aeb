#pragma once

#include "rfpose/radar.hpp"

namespace rfpose {

struct CartesianGrid {
    GridAxis x{-2.0, 2.0, 64};
    GridAxis y{-1.2, 1.2, 64};
    GridAxis z{0.8, 4.6, 64};
};

struct CartesianVolume {
    CartesianGrid grid;
    std::vector<float> power;  // [x][y][z]

    size_t index(int ix, int iy, int iz) const {
        return (size_t(ix) * grid.y.steps + iy) * grid.z.steps + iz;
    }
    float at(int ix, int iy, int iz) const { return power[index(ix, iy, iz)]; }
    double total() const;  // plain sum of density values
    double mass() const;   // sum weighted by the (uniform) voxel volume
};

enum class Interp { trilinear, nearest };

// Samples the spherical volume at each Cartesian voxel center. Every voxel
// center must map inside the spherical extents; otherwise the offending
// extent is named in the error.
CartesianVolume resample_volume(const RFVolume& vol, const CartesianGrid& grid,
                                Interp interp = Interp::trilinear);

struct HeatmapPair {
    int width = 0;       // shared x resolution
    int height_horz = 0; // z rows
    int height_vert = 0; // y rows
    GridAxis x_axis, y_axis, z_axis;
    std::vector<float> horz;  // [z][x], row 0 = far z
    std::vector<float> vert;  // [y][x], row 0 = top y

    float horz_at(int row, int col) const { return horz[size_t(row) * width + col]; }
    float vert_at(int row, int col) const { return vert[size_t(row) * width + col]; }
};

// Sums the volume over y (horizontal map) and z (vertical map); when
// `normalize` each map is scaled by its own max into [0,1], zero maps stay
// zero. Normalized maps are the decoder's canonical input.
HeatmapPair project_heatmaps(const CartesianVolume& vol, bool normalize = true);

}  // namespace rfpose
