#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "facepipe/error.hpp"
#include "facepipe/tensor.hpp"

namespace facepipe {

// 8-bit RGB image, row-major, interleaved channels.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // width * height * 3

    Image() = default;
    Image(int w, int h, uint8_t fill = 0)
        : width(w), height(h) {
        if (w <= 0 || h <= 0)
            throw InvalidInputError("image dimensions must be positive");
        pixels.assign(static_cast<size_t>(w) * h * 3, fill);
    }

    uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    bool valid() const {
        return width > 0 && height > 0 &&
               pixels.size() == static_cast<size_t>(width) * height * 3;
    }
};

// How a source image was placed into a letterboxed target frame.
struct LetterboxMeta {
    double scale = 1.0;    // r = min(target_w/src_w, target_h/src_h)
    double pad_left = 0.0; // pixels in target space
    double pad_top = 0.0;
    int src_width = 0;
    int src_height = 0;
};

// Bilinear interpolation of the four neighboring pixels; out-of-bounds
// coordinates clamp to the nearest edge pixel.
inline std::array<float, 3> bilinear_sample(const Image& img, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;

    auto cx = [&](int v) { return std::clamp(v, 0, img.width - 1); };
    auto cy = [&](int v) { return std::clamp(v, 0, img.height - 1); };
    const int xa = cx(x0), xb = cx(x0 + 1);
    const int ya = cy(y0), yb = cy(y0 + 1);

    std::array<float, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const double top = img.at(xa, ya, c) * (1.0 - fx) + img.at(xb, ya, c) * fx;
        const double bot = img.at(xa, yb, c) * (1.0 - fx) + img.at(xb, yb, c) * fx;
        out[c] = static_cast<float>(top * (1.0 - fy) + bot * fy);
    }
    return out;
}

inline int round_half_up(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

// Aspect-preserving resize into a (target_w, target_h) canvas, remaining area
// filled with `fill`. Pads split evenly, extra pixel to the right/bottom.
inline std::pair<Image, LetterboxMeta> letterbox(const Image& img, int target_w,
                                                 int target_h, uint8_t fill = 114) {
    if (!img.valid())
        throw InvalidInputError("letterbox: empty or inconsistent input image");
    if (target_w <= 0 || target_h <= 0)
        throw InvalidInputError("letterbox: target size must be positive");

    const double r = std::min(static_cast<double>(target_w) / img.width,
                              static_cast<double>(target_h) / img.height);
    const int scaled_w = std::max(1, round_half_up(img.width * r));
    const int scaled_h = std::max(1, round_half_up(img.height * r));
    const int pad_left = (target_w - scaled_w) / 2;
    const int pad_top = (target_h - scaled_h) / 2;

    Image out(target_w, target_h, fill);
    const bool direct_copy = (scaled_w == img.width && scaled_h == img.height);
    for (int y = 0; y < scaled_h; ++y) {
        for (int x = 0; x < scaled_w; ++x) {
            if (direct_copy) {
                for (int c = 0; c < 3; ++c)
                    out.at(x + pad_left, y + pad_top, c) = img.at(x, y, c);
                continue;
            }
            // center-aligned sampling so scale 1 is an exact copy
            const double sx = (x + 0.5) / r - 0.5;
            const double sy = (y + 0.5) / r - 0.5;
            const auto rgb = bilinear_sample(img, sx, sy);
            for (int c = 0; c < 3; ++c)
                out.at(x + pad_left, y + pad_top, c) =
                    static_cast<uint8_t>(std::clamp(round_half_up(rgb[c]), 0, 255));
        }
    }

    LetterboxMeta meta;
    meta.scale = r;
    meta.pad_left = pad_left;
    meta.pad_top = pad_top;
    meta.src_width = img.width;
    meta.src_height = img.height;
    return {std::move(out), meta};
}

// (1,3,H,W) f32 tensor, values pixel/255, channel order RGB.
inline Tensor normalize_to_tensor(const Image& img) {
    if (!img.valid())
        throw InvalidInputError("normalize_to_tensor: empty or inconsistent image");
    Tensor t = Tensor::zeros_f32({1, 3, img.height, img.width});
    auto data = t.f32();
    const size_t plane = static_cast<size_t>(img.height) * img.width;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                data[plane * c + static_cast<size_t>(y) * img.width + x] =
                    img.at(x, y, c) / 255.0f;
    return t;
}

} // namespace facepipe
