#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "facepipe/align.hpp"
#include "facepipe/config.hpp"
#include "facepipe/detect.hpp"
#include "facepipe/ftm.hpp"
#include "facepipe/image.hpp"
#include "facepipe/image_io.hpp"
#include "facepipe/infer.hpp"

namespace facepipe {

// Procedural fixtures: a detector and an embedder that are real FTM models,
// plus synthetic frames with planted faces the detector provably fires on.
// The face patch is an 8x8 block aligned to the stride-8 grid:
//
//   outer ring, width 1   -> pixel 0,   matched with negative weight
//   second ring, width 1  -> pixel 255, matched with positive weight
//   4x4 interior          -> identity-specific bytes, weight 0
//
// The objectness kernel is the matched filter for that ring, scaled so a
// planted cell scores logit +12 and background stays strongly negative.
// Box and landmark channels use zero kernels with constant biases, so the
// decoded geometry is exact and hand-checkable.

namespace fixture {

constexpr int kPatch = 8;          // patch size == detector stride
constexpr int kStride = 8;
constexpr float kAnchor = 16.0f;   // square anchor, pixels
constexpr float kOnLogit = 12.0f;
constexpr uint8_t kBackground = 32;

// landmark offsets from the patch origin, a small face-like arrangement
// (left eye, right eye, nose, left mouth, right mouth)
inline const std::array<std::array<float, 2>, 5>& landmark_offsets() {
    static const std::array<std::array<float, 2>, 5> off = {{
        {1.0f, 1.0f}, {7.0f, 1.0f}, {4.0f, 4.0f}, {1.5f, 7.5f}, {6.5f, 7.5f}}};
    return off;
}

// ring classification: 0 = outer (dark), 1 = bright, 2 = interior
inline int ring_of(int x, int y) {
    const int d = std::min(std::min(x, y), std::min(kPatch - 1 - x, kPatch - 1 - y));
    return d >= 2 ? 2 : d;
}

inline int count_ring(int which) {
    int n = 0;
    for (int y = 0; y < kPatch; ++y)
        for (int x = 0; x < kPatch; ++x)
            if (ring_of(x, y) == which) ++n;
    return n;
}

// deterministic [0,1) floats from the standardized mt19937 stream
class Prng {
public:
    explicit Prng(uint32_t seed) : gen_(seed) {}
    float uniform() { return static_cast<float>(gen_() >> 8) * (1.0f / 16777216.0f); }
    float symmetric(float r) { return (2.0f * uniform() - 1.0f) * r; }
    uint8_t byte() { return static_cast<uint8_t>(gen_() & 0xff); }

private:
    std::mt19937 gen_;
};

} // namespace fixture

struct PlantedFace {
    int cell_x = 1; // grid cell (stride-8 units)
    int cell_y = 1;
    uint32_t identity = 0;
};

// 8x8x3 face patch for one identity.
inline std::array<uint8_t, fixture::kPatch * fixture::kPatch * 3>
make_face_patch(uint32_t identity) {
    std::array<uint8_t, fixture::kPatch * fixture::kPatch * 3> patch{};
    fixture::Prng rng(0xFACE0000u + identity);
    for (int y = 0; y < fixture::kPatch; ++y)
        for (int x = 0; x < fixture::kPatch; ++x) {
            const int ring = fixture::ring_of(x, y);
            for (int c = 0; c < 3; ++c) {
                uint8_t v = 0;
                if (ring == 1) v = 255;
                else if (ring == 2) v = rng.byte();
                patch[(y * fixture::kPatch + x) * 3 + c] = v;
            }
        }
    return patch;
}

// Uniform-background frame with the given faces planted on the stride grid.
inline Image make_synthetic_frame(int size, std::span<const PlantedFace> faces) {
    Image img(size, size, fixture::kBackground);
    const int grid = size / fixture::kStride;
    for (const auto& f : faces) {
        if (f.cell_x < 0 || f.cell_y < 0 || f.cell_x >= grid || f.cell_y >= grid)
            throw InvalidInputError("planted face cell outside frame grid");
        const auto patch = make_face_patch(f.identity);
        const int ox = f.cell_x * fixture::kStride;
        const int oy = f.cell_y * fixture::kStride;
        for (int y = 0; y < fixture::kPatch; ++y)
            for (int x = 0; x < fixture::kPatch; ++x)
                for (int c = 0; c < 3; ++c)
                    img.at(ox + x, oy + y, c) =
                        patch[(y * fixture::kPatch + x) * 3 + c];
    }
    return img;
}

// Deterministic face placement: k slots on a widely spaced sub-grid, at least
// one cell away from every border so aligned crops never touch the edge.
inline std::vector<PlantedFace> default_face_layout(int k, int frame_size) {
    const int grid = frame_size / fixture::kStride;
    std::vector<int> slots;
    for (int c = 1; c <= grid - 3; c += 2) slots.push_back(c);
    const int per_row = static_cast<int>(slots.size());
    if (k > per_row * per_row)
        throw InvalidInputError("too many faces for this frame size");
    std::vector<PlantedFace> faces;
    for (int i = 0; i < k; ++i)
        faces.push_back({slots[i % per_row], slots[i / per_row],
                         static_cast<uint32_t>(i)});
    return faces;
}

// The detection the fixture detector decodes for a face planted at a cell:
// 16x16 box centered on the cell, landmarks at the fixed offsets.
inline Detection planted_detection(int cell_x, int cell_y) {
    Detection d;
    const float cx = cell_x * fixture::kStride + fixture::kStride / 2.0f;
    const float cy = cell_y * fixture::kStride + fixture::kStride / 2.0f;
    d.box = {cx - fixture::kAnchor / 2, cy - fixture::kAnchor / 2,
             cx + fixture::kAnchor / 2, cy + fixture::kAnchor / 2};
    d.score = 1.0f;
    for (int i = 0; i < 5; ++i) {
        d.landmarks[i][0] = cell_x * fixture::kStride + fixture::landmark_offsets()[i][0];
        d.landmarks[i][1] = cell_y * fixture::kStride + fixture::landmark_offsets()[i][1];
    }
    return d;
}

inline HeadSpec fixture_head() {
    return HeadSpec{fixture::kStride, {{fixture::kAnchor, fixture::kAnchor}}};
}

// Single-head detector: one stride-8 conv over the image whose 16 output
// channels are directly the decode layout (4 box, 1 obj, 10 landmark,
// 1 class).
inline Model make_fixture_detector(int input_size) {
    if (input_size <= 0 || input_size % 32 != 0)
        throw InvalidInputError("fixture detector input size must be a multiple of 32");
    const int K = fixture::kPatch;
    const int grid = input_size / fixture::kStride;

    std::vector<float> w(static_cast<size_t>(16) * 3 * K * K, 0.0f);
    std::vector<float> b(16, 0.0f);

    const int bright = fixture::count_ring(1) * 3; // matched positions
    const float beta = 2.0f * fixture::kOnLogit / static_cast<float>(bright);
    auto widx = [&](int o, int c, int y, int x) {
        return ((static_cast<size_t>(o) * 3 + c) * K + y) * K + x;
    };
    for (int y = 0; y < K; ++y)
        for (int x = 0; x < K; ++x) {
            const int ring = fixture::ring_of(x, y);
            for (int c = 0; c < 3; ++c) {
                if (ring == 1) w[widx(4, c, y, x)] = beta;
                else if (ring == 0) w[widx(4, c, y, x)] = -beta;
            }
        }
    b[4] = -fixture::kOnLogit;  // objectness: planted -> +12, blank -> -12
    b[15] = fixture::kOnLogit;  // class: constant high

    // landmark channels 5..14: zero kernels, constant bias c so the decoded
    // point lands at cell_origin + (4 + offset_from_center); exact dyadic
    // values keep the arithmetic bit-clean
    for (int i = 0; i < 5; ++i) {
        const auto off = fixture::landmark_offsets()[i];
        b[5 + 2 * i] = off[0] / fixture::kAnchor;
        b[5 + 2 * i + 1] = off[1] / fixture::kAnchor;
    }

    Model m;
    m.input_shape = {1, 3, input_size, input_size};
    m.embedding_dim = 16 * grid * grid; // flattened head size
    LayerSpec conv;
    conv.kind = LayerKind::conv2d;
    conv.kernel = K;
    conv.stride = fixture::kStride;
    conv.pad = 0;
    conv.in_channels = 3;
    conv.out_channels = 16;
    conv.weight = "head.w";
    conv.bias = "head.b";
    m.layers.push_back(conv);
    m.weights.emplace("head.w", Tensor::from_f32({16, 3, K, K}, std::move(w)));
    m.weights.emplace("head.b", Tensor::from_f32({16}, std::move(b)));
    validate_model(m);
    return m;
}

// Small embedder over 112x112 aligned crops covering the full operator set:
// conv / prelu / depthwise / conv / global_depthwise / add_bias / flatten /
// linear / l2norm. Weights are seeded uniform noise scaled by fan-in.
inline Model make_fixture_embedder(int embedding_dim = 128, uint32_t seed = 7) {
    Model m;
    m.input_shape = {1, 3, 112, 112};
    m.embedding_dim = embedding_dim;
    fixture::Prng rng(0xE0BEDu + seed);

    auto fill = [&](std::vector<int> shape, float fan_in) {
        const int64_t n = Tensor::numel_of(shape);
        std::vector<float> data(static_cast<size_t>(n));
        const float r = std::sqrt(3.0f / fan_in);
        for (auto& v : data) v = rng.symmetric(r);
        return Tensor::from_f32(std::move(shape), std::move(data));
    };
    auto add_layer = [&](LayerKind kind, int stride, int pad, int kernel,
                         const std::string& weight, const std::string& bias) {
        LayerSpec l;
        l.kind = kind;
        l.stride = stride;
        l.pad = pad;
        l.kernel = kernel;
        l.weight = weight;
        l.bias = bias;
        m.layers.push_back(l);
    };

    m.weights.emplace("c1.w", fill({8, 3, 3, 3}, 27.0f));
    m.weights.emplace("c1.b", fill({8}, 8.0f));
    add_layer(LayerKind::conv2d, 2, 1, 3, "c1.w", "c1.b");
    m.weights.emplace("p1.a", Tensor::from_f32({8}, std::vector<float>(8, 0.25f)));
    add_layer(LayerKind::prelu, 1, 0, 0, "p1.a", "");
    m.weights.emplace("dw.w", fill({8, 1, 3, 3}, 9.0f));
    add_layer(LayerKind::depthwise_conv2d, 2, 1, 3, "dw.w", "");
    m.weights.emplace("p2.a", Tensor::from_f32({8}, std::vector<float>(8, 0.25f)));
    add_layer(LayerKind::prelu, 1, 0, 0, "p2.a", "");
    m.weights.emplace("c2.w", fill({16, 8, 3, 3}, 72.0f));
    add_layer(LayerKind::conv2d, 2, 1, 3, "c2.w", "");
    m.weights.emplace("gdw.w", fill({16, 1, 14, 14}, 196.0f));
    add_layer(LayerKind::global_depthwise, 1, 0, 0, "gdw.w", "");
    m.weights.emplace("gdw.b", fill({16}, 4.0f));
    add_layer(LayerKind::add_bias, 1, 0, 0, "", "gdw.b");
    add_layer(LayerKind::flatten, 1, 0, 0, "", "");
    m.weights.emplace("fc.w", fill({embedding_dim, 16}, 16.0f));
    add_layer(LayerKind::linear, 1, 0, 0, "fc.w", "");
    add_layer(LayerKind::l2norm, 1, 0, 0, "", "");
    validate_model(m);
    return m;
}

// Everything the CLI and the tests need on disk to run the full pipeline.
struct FixtureSet {
    std::string dir;
    std::string detector;
    std::string detector_i8;
    std::string embedder;
    std::string embedder_i8;
    std::string config;
    std::string blank_frame;
    std::string face_a;      // identity 0
    std::string face_b;      // identity 1
    std::string scene_two;   // identities 0 and 1
};

inline FixtureSet generate_fixtures(const std::string& dir, int input_size = 64,
                                    int embedding_dim = 128) {
    FixtureSet fs;
    fs.dir = dir;
    fs.detector = dir + "/detector.ftm";
    fs.detector_i8 = dir + "/detector_i8.ftm";
    fs.embedder = dir + "/embedder.ftm";
    fs.embedder_i8 = dir + "/embedder_i8.ftm";
    fs.config = dir + "/fixture.cfg";
    fs.blank_frame = dir + "/blank.ppm";
    fs.face_a = dir + "/face_a.ppm";
    fs.face_b = dir + "/face_b.ppm";
    fs.scene_two = dir + "/scene_two.ppm";

    Model det = make_fixture_detector(input_size);
    Model emb = make_fixture_embedder(embedding_dim);

    // calibration inputs: normalized synthetic frames for the detector,
    // aligned crops of the planted identities for the embedder
    std::vector<Tensor> det_samples;
    std::vector<Tensor> emb_samples;
    for (int k = 1; k <= 3; ++k) {
        auto faces = default_face_layout(k, input_size);
        const Image frame = make_synthetic_frame(input_size, faces);
        det_samples.push_back(normalize_to_tensor(frame));
        for (const auto& f : faces) {
            const auto d = planted_detection(f.cell_x, f.cell_y);
            emb_samples.push_back(normalize_to_tensor(align_face(frame, d).crop));
        }
    }
    Model det_q = quantize_model(det, calibrate(det, det_samples));
    Model emb_q = quantize_model(emb, calibrate(emb, emb_samples));

    save_model_file(fs.detector, det);
    save_model_file(fs.detector_i8, det_q);
    save_model_file(fs.embedder, emb);
    save_model_file(fs.embedder_i8, emb_q);

    const PlantedFace alice{1, 1, 0};
    const PlantedFace bob{1, 1, 1};
    write_ppm(fs.blank_frame, Image(input_size, input_size, fixture::kBackground));
    write_ppm(fs.face_a, make_synthetic_frame(input_size, std::vector{alice}));
    write_ppm(fs.face_b, make_synthetic_frame(input_size, std::vector{bob}));
    write_ppm(fs.scene_two,
              make_synthetic_frame(input_size,
                                   std::vector{PlantedFace{1, 1, 0}, PlantedFace{3, 1, 1}}));

    Config cfg;
    cfg.detector.model_path = fs.detector;
    cfg.detector.input_size = input_size;
    cfg.detector.anchors = {{fixture::kStride, {{fixture::kAnchor, fixture::kAnchor}}}};
    cfg.embedder.model_path = fs.embedder;
    cfg.embedder.embedding_dim = embedding_dim;
    write_config(fs.config, cfg);
    return fs;
}

} // namespace facepipe
