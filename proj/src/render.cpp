#include "rfpose/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rfpose {

void Image::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    size_t i = (size_t(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Image::line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
                 unsigned char b) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Image::save_ppm(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write image: " + path);
    f << "P6\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
}

namespace {

// heat colormap: black -> blue -> yellow -> white
void heat_color(float v, unsigned char& r, unsigned char& g, unsigned char& b) {
    v = std::clamp(v, 0.0f, 1.0f);
    float rr = std::clamp(2.4f * v - 0.6f, 0.0f, 1.0f);
    float gg = std::clamp(2.0f * v - 0.5f, 0.0f, 1.0f);
    float bb = std::clamp(v < 0.4f ? 2.5f * v : 2.0f - 2.5f * v, 0.0f, 1.0f);
    r = (unsigned char)(255 * rr);
    g = (unsigned char)(255 * gg);
    b = (unsigned char)(255 * bb);
}

void blit_heat(Image& img, const float* map, int h, int w, int x0, int scale) {
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            unsigned char r, g, b;
            heat_color(map[size_t(y) * w + x], r, g, b);
            for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx)
                    img.set(x0 + x * scale + dx, y * scale + dy, r, g, b);
        }
}

void draw_skeleton(Image& img, const std::array<std::pair<int, int>, kNumKeypoints>& px, int x0,
                   int scale, unsigned char r, unsigned char g, unsigned char b) {
    for (const auto& [a, c] : skeleton_bones())
        img.line(x0 + px[a].first * scale + scale / 2, px[a].second * scale + scale / 2,
                 x0 + px[c].first * scale + scale / 2, px[c].second * scale + scale / 2, r, g, b);
    for (const auto& [x, y] : px) {
        img.set(x0 + x * scale + scale / 2, y * scale + scale / 2, 255, 255, 255);
    }
}

void draw_box(Image& img, const std::array<double, 4>& box, int x0, int scale, unsigned char r,
              unsigned char g, unsigned char b) {
    int lx = int((box[0] - 0.5 * box[2]) * scale), rx = int((box[0] + 0.5 * box[2]) * scale);
    int ty = int((box[1] - 0.5 * box[3]) * scale), by = int((box[1] + 0.5 * box[3]) * scale);
    img.line(x0 + lx, ty, x0 + rx, ty, r, g, b);
    img.line(x0 + lx, by, x0 + rx, by, r, g, b);
    img.line(x0 + lx, ty, x0 + lx, by, r, g, b);
    img.line(x0 + rx, ty, x0 + rx, by, r, g, b);
}

}  // namespace

Image render_frame(const std::vector<float>& heatmap_frame, int heat_h, int heat_w,
                   const TruthFrame& truth, const FramePoses* pred, int cam_w, int cam_h,
                   int upscale) {
    int panel_w = heat_w * upscale;
    int cam_panel_w = cam_w * upscale;
    Image img(2 * panel_w + cam_panel_w + 2 * upscale, std::max(heat_h, cam_h) * upscale);

    const float* horz = heatmap_frame.data();
    const float* vert = heatmap_frame.data() + size_t(heat_h) * heat_w;
    blit_heat(img, horz, heat_h, heat_w, 0, upscale);
    blit_heat(img, vert, heat_h, heat_w, panel_w + upscale, upscale);

    for (const TruthPerson& tp : truth.persons)
        draw_box(img, tp.box, panel_w + upscale, upscale, 0, 200, 0);
    if (pred)
        for (const PosePerson& pp : pred->persons)
            draw_box(img,
                     {double(pp.box[0]), double(pp.box[1]), double(pp.box[2]), double(pp.box[3])},
                     panel_w + upscale, upscale, 230, 40, 40);

    int cam_x0 = 2 * panel_w + 2 * upscale;
    for (const TruthPerson& tp : truth.persons) {
        std::array<std::pair<int, int>, kNumKeypoints> px;
        for (int k = 0; k < kNumKeypoints; ++k)
            px[k] = {tp.keypoints[k].alpha, tp.keypoints[k].beta};
        draw_skeleton(img, px, cam_x0, upscale, 0, 200, 0);
    }
    if (pred)
        for (const PosePerson& pp : pred->persons) {
            std::array<std::pair<int, int>, kNumKeypoints> px;
            for (int k = 0; k < kNumKeypoints; ++k)
                px[k] = {pp.keypoints[k].alpha, pp.keypoints[k].beta};
            draw_skeleton(img, px, cam_x0, upscale, 230, 40, 40);
        }
    return img;
}

}  // namespace rfpose
