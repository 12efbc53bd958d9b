#pragma once

#include <array>
#include <cmath>
#include <span>

#include "facepipe/detect.hpp"
#include "facepipe/error.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

using Points5 = std::array<std::array<float, 2>, 5>;

// Canonical 112x112 five-point destination template, the widely used public
// face-recognition reference coordinates. Overridable through config.
inline const Points5& canonical_template() {
    static const Points5 pts = {{{38.2946f, 51.6963f},
                                 {73.5318f, 51.5014f},
                                 {56.0252f, 71.7366f},
                                 {41.5493f, 92.3655f},
                                 {70.7299f, 92.2041f}}};
    return pts;
}

// Rotation + uniform scale + translation:
//   x' = a*x - b*y + tx
//   y' = b*x + a*y + ty
struct SimilarityTransform {
    double a = 1.0, b = 0.0, tx = 0.0, ty = 0.0;

    double scale() const { return std::sqrt(a * a + b * b); }

    std::array<double, 2> apply(double x, double y) const {
        return {a * x - b * y + tx, b * x + a * y + ty};
    }

    SimilarityTransform inverse() const {
        const double s2 = a * a + b * b;
        if (s2 <= 0.0)
            throw DegenerateGeometryError("similarity transform has zero scale");
        SimilarityTransform inv;
        inv.a = a / s2;
        inv.b = -b / s2;
        inv.tx = -(inv.a * tx - inv.b * ty);
        inv.ty = -(inv.b * tx + inv.a * ty);
        return inv;
    }
};

inline double transform_residual(const SimilarityTransform& t,
                                 std::span<const std::array<double, 2>> src,
                                 std::span<const std::array<double, 2>> dst) {
    double r = 0.0;
    for (size_t i = 0; i < src.size(); ++i) {
        const auto p = t.apply(src[i][0], src[i][1]);
        const double dx = p[0] - dst[i][0];
        const double dy = p[1] - dst[i][1];
        r += dx * dx + dy * dy;
    }
    return r;
}

namespace detail {

// Gaussian elimination with partial pivoting on a 4x4 system.
inline std::array<double, 4> solve4(std::array<std::array<double, 5>, 4> m) {
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        if (std::abs(m[col][col]) < 1e-12)
            throw DegenerateGeometryError("degenerate point configuration");
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 5; ++c)
                m[r][c] -= f * m[col][c];
        }
    }
    return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

} // namespace detail

// Least-squares fit of the 4-parameter similarity mapping src -> dst via the
// normal equations. Exact for noiseless similarity-related point sets.
inline SimilarityTransform solve_similarity(std::span<const std::array<double, 2>> src,
                                            std::span<const std::array<double, 2>> dst) {
    if (src.size() != dst.size() || src.size() < 2)
        throw InvalidInputError("solve_similarity: need matching point lists of size >= 2");

    const double n = static_cast<double>(src.size());
    double sx = 0, sy = 0, su = 0, sv = 0, sxx = 0, sxu = 0, sxv = 0;
    bool distinct = false;
    for (size_t i = 0; i < src.size(); ++i) {
        const double x = src[i][0], y = src[i][1];
        const double u = dst[i][0], v = dst[i][1];
        if (i > 0 && (x != src[0][0] || y != src[0][1])) distinct = true;
        sx += x;
        sy += y;
        su += u;
        sv += v;
        sxx += x * x + y * y;
        sxu += x * u + y * v;
        sxv += x * v - y * u;
    }
    if (!distinct)
        throw DegenerateGeometryError("solve_similarity: all source points coincide");

    // unknowns ordered (a, b, tx, ty); rows are d/da, d/db, d/dtx, d/dty
    std::array<std::array<double, 5>, 4> sys = {{
        {sxx, 0.0, sx, sy, sxu},
        {0.0, sxx, -sy, sx, sxv},
        {sx, -sy, n, 0.0, su},
        {sy, sx, 0.0, n, sv},
    }};
    const auto sol = detail::solve4(sys);
    SimilarityTransform t;
    t.a = sol[0];
    t.b = sol[1];
    t.tx = sol[2];
    t.ty = sol[3];
    return t;
}

inline SimilarityTransform solve_similarity(const Points5& src, const Points5& dst) {
    std::array<std::array<double, 2>, 5> s, d;
    for (int i = 0; i < 5; ++i) {
        s[i] = {src[i][0], src[i][1]};
        d[i] = {dst[i][0], dst[i][1]};
    }
    return solve_similarity(std::span<const std::array<double, 2>>(s),
                            std::span<const std::array<double, 2>>(d));
}

// Output pixel (u,v) = bilinear_sample(img, T^-1(u,v)); out-of-bounds samples
// clamp to the edge.
inline Image warp_crop(const Image& img, const SimilarityTransform& t, int out_w,
                       int out_h) {
    if (!img.valid())
        throw InvalidInputError("warp_crop: empty input image");
    if (out_w <= 0 || out_h <= 0)
        throw InvalidInputError("warp_crop: output size must be positive");
    const SimilarityTransform inv = t.inverse();
    Image out(out_w, out_h);
    for (int v = 0; v < out_h; ++v)
        for (int u = 0; u < out_w; ++u) {
            const auto p = inv.apply(u, v);
            const auto rgb = bilinear_sample(img, p[0], p[1]);
            for (int c = 0; c < 3; ++c)
                out.at(u, v, c) =
                    static_cast<uint8_t>(std::clamp(round_half_up(rgb[c]), 0, 255));
        }
    return out;
}

// Plain bilinear resize of a box region, the no-alignment fallback when a
// pipeline feeds raw detection crops to the embedder.
inline Image crop_box_resize(const Image& img, const Box& box, int out_w, int out_h) {
    if (!(box.x1 < box.x2 && box.y1 < box.y2))
        throw InvalidInputError("crop_box_resize: degenerate box");
    Image out(out_w, out_h);
    const double sx = (box.x2 - box.x1) / out_w;
    const double sy = (box.y2 - box.y1) / out_h;
    for (int v = 0; v < out_h; ++v)
        for (int u = 0; u < out_w; ++u) {
            const auto rgb = bilinear_sample(img, box.x1 + (u + 0.5) * sx - 0.5,
                                             box.y1 + (v + 0.5) * sy - 0.5);
            for (int c = 0; c < 3; ++c)
                out.at(u, v, c) =
                    static_cast<uint8_t>(std::clamp(round_half_up(rgb[c]), 0, 255));
        }
    return out;
}

struct AlignResult {
    Image crop;
    SimilarityTransform transform;
    // After mapping, the left eye should still be left of the right eye. A
    // false value flags swapped/mirrored landmarks; callers may warn.
    bool eye_order_ok = true;
};

inline AlignResult align_face(const Image& img, const Detection& det,
                              const Points5& template_pts = canonical_template(),
                              int out_size = 112) {
    std::array<std::array<double, 2>, 5> src, dst;
    for (int i = 0; i < 5; ++i) {
        src[i] = {det.landmarks[i][0], det.landmarks[i][1]};
        dst[i] = {template_pts[i][0], template_pts[i][1]};
    }
    const auto t = solve_similarity(std::span<const std::array<double, 2>>(src),
                                    std::span<const std::array<double, 2>>(dst));
    AlignResult res;
    res.transform = t;
    res.crop = warp_crop(img, t, out_size, out_size);
    const auto le = t.apply(src[0][0], src[0][1]);
    const auto re = t.apply(src[1][0], src[1][1]);
    res.eye_order_ok = le[0] < re[0];
    return res;
}

} // namespace facepipe
