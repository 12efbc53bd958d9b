#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "facepipe/image.hpp"
#include "facepipe/infer.hpp"
#include "facepipe/model.hpp"

namespace facepipe {

struct Box {
    float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    float width() const { return x2 - x1; }
    float height() const { return y2 - y1; }
    float area() const { return std::max(0.0f, width()) * std::max(0.0f, height()); }
};

// One detected face: box + confidence + the five landmarks
// (left eye, right eye, nose, left mouth corner, right mouth corner).
struct Detection {
    Box box;
    float score = 0.0f;
    std::array<std::array<float, 2>, 5> landmarks{};
};

// One output grid of the detector: downsampling stride and its anchor sizes.
struct HeadSpec {
    int stride = 8; // one of {8, 16, 32}
    std::vector<std::array<float, 2>> anchors; // (aw, ah) pixel pairs
};

inline float iou(const Box& a, const Box& b) {
    const float ix1 = std::max(a.x1, b.x1);
    const float iy1 = std::max(a.y1, b.y1);
    const float ix2 = std::min(a.x2, b.x2);
    const float iy2 = std::min(a.y2, b.y2);
    const float iw = ix2 - ix1;
    const float ih = iy2 - iy1;
    if (iw <= 0.0f || ih <= 0.0f) return 0.0f;
    const float inter = iw * ih;
    const float uni = a.area() + b.area() - inter;
    if (uni <= 0.0f) return 0.0f;
    return inter / uni;
}

inline float sigmoid(float x) {
    return 1.0f / (1.0f + std::exp(-x));
}

// Decode one head tensor (1, A*16, H, W) into detections in letterboxed
// coordinates. Per anchor the 16 channels are 4 box (tx,ty,tw,th),
// 1 objectness, 10 landmark (x,y interleaved), 1 class:
//   cx = (2*sig(tx) - 0.5 + j) * s       w = (2*sig(tw))^2 * aw
//   cy = (2*sig(ty) - 0.5 + i) * s       h = (2*sig(th))^2 * ah
//   score = sig(t_obj) * sig(t_cls)
//   lm_k = (t_lx_k * aw + j*s, t_ly_k * ah + i*s)
inline std::vector<Detection> decode_head(const Tensor& raw, const HeadSpec& head,
                                          float conf_thresh) {
    if (raw.rank() != 4 || raw.dim(0) != 1)
        throw ShapeError("decode_head: raw tensor must be (1, A*16, H, W)");
    const int A = static_cast<int>(head.anchors.size());
    if (A < 1)
        throw ShapeError("decode_head: head needs at least one anchor");
    if (raw.dim(1) != A * 16)
        throw ShapeError("decode_head: channel count is not anchors*16");
    const int H = raw.dim(2), W = raw.dim(3);
    const float s = static_cast<float>(head.stride);

    std::vector<Detection> dets;
    auto ch = [&](int a, int c, int i, int j) {
        return raw.at4(0, a * 16 + c, i, j);
    };
    for (int a = 0; a < A; ++a) {
        const float aw = head.anchors[a][0];
        const float ah = head.anchors[a][1];
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const float score = sigmoid(ch(a, 4, i, j)) * sigmoid(ch(a, 15, i, j));
                if (score < conf_thresh) continue;
                const float cx = (2.0f * sigmoid(ch(a, 0, i, j)) - 0.5f + j) * s;
                const float cy = (2.0f * sigmoid(ch(a, 1, i, j)) - 0.5f + i) * s;
                const float tw = 2.0f * sigmoid(ch(a, 2, i, j));
                const float th = 2.0f * sigmoid(ch(a, 3, i, j));
                const float w = tw * tw * aw;
                const float h = th * th * ah;
                Detection d;
                d.box = {cx - w / 2.0f, cy - h / 2.0f, cx + w / 2.0f, cy + h / 2.0f};
                d.score = score;
                for (int k = 0; k < 5; ++k) {
                    d.landmarks[k][0] = ch(a, 5 + 2 * k, i, j) * aw + j * s;
                    d.landmarks[k][1] = ch(a, 5 + 2 * k + 1, i, j) * ah + i * s;
                }
                dets.push_back(d);
            }
    }
    return dets;
}

namespace detail {

// Total order: score desc, then x1, y1, x2, y2 asc so equal-score runs are
// still reproducible.
inline bool det_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
    if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
    if (a.box.x2 != b.box.x2) return a.box.x2 < b.box.x2;
    return a.box.y2 < b.box.y2;
}

} // namespace detail

// Greedy NMS: keep a detection iff its IoU with every already-kept detection
// is below the threshold. Landmarks travel with their boxes.
inline std::vector<Detection> nms(std::vector<Detection> dets, float iou_thresh) {
    std::sort(dets.begin(), dets.end(), detail::det_order);
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept)
            if (iou(d.box, k.box) >= iou_thresh) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

// Map letterboxed coordinates back into the original image:
// p = (p_letterboxed - pad) / scale, clamped to the source bounds. Boxes that
// collapse to zero area after clamping (fully inside the padding) are dropped.
inline std::vector<Detection> unmap_coords(std::vector<Detection> dets,
                                           const LetterboxMeta& meta) {
    auto ux = [&](float x) {
        return std::clamp(static_cast<float>((x - meta.pad_left) / meta.scale), 0.0f,
                          static_cast<float>(meta.src_width));
    };
    auto uy = [&](float y) {
        return std::clamp(static_cast<float>((y - meta.pad_top) / meta.scale), 0.0f,
                          static_cast<float>(meta.src_height));
    };
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (auto d : dets) {
        d.box = {ux(d.box.x1), uy(d.box.y1), ux(d.box.x2), uy(d.box.y2)};
        for (auto& lm : d.landmarks) {
            lm[0] = ux(lm[0]);
            lm[1] = uy(lm[1]);
        }
        if (d.box.x1 < d.box.x2 && d.box.y1 < d.box.y2)
            out.push_back(d);
    }
    return out;
}

// The two halves of the detector are exposed separately so a harness can time
// network inference and post-processing independently.

struct DetectorForward {
    Tensor raw;
    LetterboxMeta meta;
    int input_w = 0; // letterboxed network input size
    int input_h = 0;
};

// letterbox -> normalize -> forward
inline DetectorForward detect_forward(const Model& model, const Image& img,
                                      uint8_t fill = 114,
                                      DType precision = DType::f32) {
    if (model.input_shape.size() != 4)
        throw ShapeError("detector model input must be 4-D");
    const int th = model.input_shape[2];
    const int tw = model.input_shape[3];
    auto [boxed, meta] = letterbox(img, tw, th, fill);
    Tensor input = normalize_to_tensor(boxed);
    Tensor raw = precision == DType::i8 ? forward_i8(model, input)
                                        : forward_f32(model, input);
    if (raw.rank() != 4)
        throw ShapeError("detector model must produce a 4-D head tensor");
    return {std::move(raw), meta, tw, th};
}

// decode applicable heads -> NMS -> unmap. The output grid selects which
// configured heads apply (grid dims must equal input_size / stride); with a
// single-output chain exactly one head matches.
inline std::vector<Detection> detect_post(const DetectorForward& fwd,
                                          std::span<const HeadSpec> heads,
                                          float conf_thresh, float iou_thresh) {
    std::vector<Detection> all;
    bool matched = false;
    for (const auto& head : heads) {
        if (head.stride <= 0 || fwd.input_w % head.stride != 0 ||
            fwd.input_h % head.stride != 0)
            throw ShapeError("detector input size must be divisible by head stride");
        if (fwd.raw.dim(2) != fwd.input_h / head.stride ||
            fwd.raw.dim(3) != fwd.input_w / head.stride)
            continue;
        matched = true;
        auto dets = decode_head(fwd.raw, head, conf_thresh);
        all.insert(all.end(), dets.begin(), dets.end());
    }
    if (!matched)
        throw ShapeError("detector output grid matches no configured head");
    auto kept = nms(std::move(all), iou_thresh);
    return unmap_coords(std::move(kept), fwd.meta);
}

// Full detector: letterbox -> normalize -> forward -> decode -> NMS -> unmap.
inline std::vector<Detection> detect_faces(const Model& model,
                                           std::span<const HeadSpec> heads,
                                           const Image& img, float conf_thresh,
                                           float iou_thresh, uint8_t fill = 114,
                                           DType precision = DType::f32,
                                           LetterboxMeta* meta_out = nullptr) {
    auto fwd = detect_forward(model, img, fill, precision);
    if (meta_out) *meta_out = fwd.meta;
    return detect_post(fwd, heads, conf_thresh, iou_thresh);
}

// --- Detection JSON interchange --------------------------------------------
// {image, width, height, detections:[{box:[x1,y1,x2,y2], score,
//  landmarks:[[x,y] x5]}]}

inline nlohmann::json detections_to_json(const std::string& image_name, int width,
                                         int height, std::span<const Detection> dets) {
    nlohmann::json j;
    j["image"] = image_name;
    j["width"] = width;
    j["height"] = height;
    auto arr = nlohmann::json::array();
    for (const auto& d : dets) {
        nlohmann::json dj;
        dj["box"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
        dj["score"] = d.score;
        auto lms = nlohmann::json::array();
        for (const auto& lm : d.landmarks) lms.push_back({lm[0], lm[1]});
        dj["landmarks"] = lms;
        arr.push_back(dj);
    }
    j["detections"] = arr;
    return j;
}

inline std::vector<Detection> detections_from_json(const nlohmann::json& j) {
    std::vector<Detection> dets;
    for (const auto& dj : j.at("detections")) {
        Detection d;
        const auto& b = dj.at("box");
        d.box = {b.at(0).get<float>(), b.at(1).get<float>(), b.at(2).get<float>(),
                 b.at(3).get<float>()};
        d.score = dj.at("score").get<float>();
        if (dj.contains("landmarks")) {
            const auto& lms = dj.at("landmarks");
            for (size_t k = 0; k < 5 && k < lms.size(); ++k) {
                d.landmarks[k][0] = lms.at(k).at(0).get<float>();
                d.landmarks[k][1] = lms.at(k).at(1).get<float>();
            }
        }
        dets.push_back(d);
    }
    return dets;
}

} // namespace facepipe
