#pragma once

#include <string>
#include <vector>

#include "rfpose/dataset.hpp"
#include "rfpose/decoder.hpp"

namespace rfpose {

// Binary PPM (P6) image buffer.
struct Image {
    int width = 0, height = 0;
    std::vector<unsigned char> rgb;

    Image(int w, int h) : width(w), height(h), rgb(size_t(w) * h * 3, 0) {}
    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
    void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g, unsigned char b);
    void save_ppm(const std::string& path) const;
};

// Three panels, each upscaled: horizontal map | vertical map with boxes |
// camera-space skeletons (truth green, prediction red).
Image render_frame(const std::vector<float>& heatmap_frame, int heat_h, int heat_w,
                   const TruthFrame& truth, const FramePoses* pred, int cam_w, int cam_h,
                   int upscale = 4);

}  // namespace rfpose
