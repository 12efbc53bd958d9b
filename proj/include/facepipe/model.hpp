#pragma once

#include <map>
#include <string>
#include <vector>

#include "facepipe/error.hpp"
#include "facepipe/tensor.hpp"

namespace facepipe {

enum class LayerKind {
    conv2d,
    depthwise_conv2d,
    linear,
    prelu,
    add_bias,
    global_depthwise,
    flatten,
    l2norm,
};

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
        case LayerKind::linear: return "linear";
        case LayerKind::prelu: return "prelu";
        case LayerKind::add_bias: return "add_bias";
        case LayerKind::global_depthwise: return "global_depthwise";
        case LayerKind::flatten: return "flatten";
        case LayerKind::l2norm: return "l2norm";
    }
    return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "depthwise_conv2d") return LayerKind::depthwise_conv2d;
    if (s == "linear") return LayerKind::linear;
    if (s == "prelu") return LayerKind::prelu;
    if (s == "add_bias") return LayerKind::add_bias;
    if (s == "global_depthwise") return LayerKind::global_depthwise;
    if (s == "flatten") return LayerKind::flatten;
    if (s == "l2norm") return LayerKind::l2norm;
    throw ModelError("unknown layer kind: " + s);
}

struct QuantParams {
    float scale = 0.0f; // symmetric scheme, zero point fixed at 0
};

// One layer of the executor chain. Weight/bias/alpha are names of tensors in
// the owning Model's weight map; empty string means not present.
struct LayerSpec {
    LayerKind kind = LayerKind::flatten;
    int stride = 1;
    int pad = 0;
    int kernel = 0;
    int in_channels = 0;
    int out_channels = 0;
    std::string weight; // conv/depthwise/global_depthwise/linear kernel, prelu alpha
    std::string bias;   // optional for conv/linear, required for add_bias
    // activation quantization scales, set on quantized models (0 = unset)
    float in_scale = 0.0f;
    float out_scale = 0.0f;
};

struct Model {
    std::vector<LayerSpec> layers;
    std::map<std::string, Tensor> weights;
    std::vector<int> input_shape; // e.g. {1,3,112,112}
    int embedding_dim = 0;        // flattened output size per batch item

    const Tensor& weight(const std::string& name) const {
        auto it = weights.find(name);
        if (it == weights.end())
            throw UnresolvedWeightError("unresolved weight reference: " + name);
        return it->second;
    }

    bool has_weight(const std::string& name) const {
        return weights.find(name) != weights.end();
    }

    // A model counts as quantized when every kernel-carrying layer of the
    // integer segment (everything before the first l2norm) has an i8 weight
    // tensor. Layers after an l2norm execute in f32 and keep float weights.
    bool quantized() const {
        bool any = false;
        for (const auto& l : layers) {
            if (l.kind == LayerKind::l2norm) break;
            if (l.weight.empty()) continue;
            if (l.kind == LayerKind::prelu) continue; // alpha stays f32
            auto it = weights.find(l.weight);
            if (it == weights.end()) return false;
            if (it->second.dtype() != DType::i8) return false;
            any = true;
        }
        return any;
    }
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

inline int conv_out_dim(int in, int kernel, int stride, int pad, const std::string& what) {
    const int num = in + 2 * pad - kernel;
    require(num >= 0, what + ": kernel larger than padded input");
    return num / stride + 1;
}

} // namespace detail

// Shape of a layer's output given its input shape; validates geometry and
// weight shapes against the model's weight map.
inline std::vector<int> layer_output_shape(const Model& m, const LayerSpec& l,
                                           const std::vector<int>& in) {
    using detail::require;
    switch (l.kind) {
        case LayerKind::conv2d: {
            require(in.size() == 4, "conv2d input must be 4-D");
            require(l.stride >= 1 && l.pad >= 0, "conv2d: bad stride/pad");
            const Tensor& w = m.weight(l.weight);
            require(w.rank() == 4, "conv2d weight must be (O,I,K,K)");
            require(w.dim(1) == in[1], "conv2d: weight in_channels mismatch");
            require(w.dim(2) == l.kernel && w.dim(3) == l.kernel,
                    "conv2d: weight kernel size mismatch");
            require(l.in_channels == 0 || l.in_channels == in[1],
                    "conv2d: declared in_channels mismatch");
            require(l.out_channels == 0 || l.out_channels == w.dim(0),
                    "conv2d: declared out_channels mismatch");
            if (!l.bias.empty()) {
                const Tensor& b = m.weight(l.bias);
                require(b.numel() == w.dim(0), "conv2d: bias size mismatch");
            }
            const int oh = detail::conv_out_dim(in[2], l.kernel, l.stride, l.pad, "conv2d");
            const int ow = detail::conv_out_dim(in[3], l.kernel, l.stride, l.pad, "conv2d");
            return {in[0], w.dim(0), oh, ow};
        }
        case LayerKind::depthwise_conv2d: {
            require(in.size() == 4, "depthwise input must be 4-D");
            const Tensor& w = m.weight(l.weight);
            require(w.rank() == 4 && w.dim(1) == 1, "depthwise weight must be (C,1,K,K)");
            require(w.dim(0) == in[1], "depthwise: channel count mismatch");
            require(w.dim(2) == l.kernel && w.dim(3) == l.kernel,
                    "depthwise: weight kernel size mismatch");
            if (!l.bias.empty())
                require(m.weight(l.bias).numel() == in[1], "depthwise: bias size mismatch");
            const int oh = detail::conv_out_dim(in[2], l.kernel, l.stride, l.pad, "depthwise");
            const int ow = detail::conv_out_dim(in[3], l.kernel, l.stride, l.pad, "depthwise");
            return {in[0], in[1], oh, ow};
        }
        case LayerKind::linear: {
            require(in.size() == 2, "linear input must be 2-D (flatten first)");
            const Tensor& w = m.weight(l.weight);
            require(w.rank() == 2, "linear weight must be (O,I)");
            require(w.dim(1) == in[1], "linear: weight in_features mismatch");
            if (!l.bias.empty())
                require(m.weight(l.bias).numel() == w.dim(0), "linear: bias size mismatch");
            return {in[0], w.dim(0)};
        }
        case LayerKind::prelu: {
            require(in.size() == 4 || in.size() == 2, "prelu input must be 2-D or 4-D");
            const Tensor& a = m.weight(l.weight);
            require(a.numel() == in[1], "prelu: alpha must have one slope per channel");
            return in;
        }
        case LayerKind::add_bias: {
            require(in.size() == 4 || in.size() == 2, "add_bias input must be 2-D or 4-D");
            require(m.weight(l.bias.empty() ? l.weight : l.bias).numel() == in[1],
                    "add_bias: bias size mismatch");
            return in;
        }
        case LayerKind::global_depthwise: {
            require(in.size() == 4, "global_depthwise input must be 4-D");
            const Tensor& w = m.weight(l.weight);
            require(w.rank() == 4 && w.dim(1) == 1, "global_depthwise weight must be (C,1,H,W)");
            require(w.dim(0) == in[1] && w.dim(2) == in[2] && w.dim(3) == in[3],
                    "global_depthwise: weight must cover the full input plane");
            if (!l.bias.empty())
                require(m.weight(l.bias).numel() == in[1], "global_depthwise: bias size mismatch");
            return {in[0], in[1], 1, 1};
        }
        case LayerKind::flatten: {
            int64_t n = 1;
            for (size_t i = 1; i < in.size(); ++i) n *= in[i];
            return {in[0], static_cast<int>(n)};
        }
        case LayerKind::l2norm: {
            require(in.size() == 2, "l2norm input must be 2-D");
            return in;
        }
    }
    throw ShapeError("unhandled layer kind");
}

// Per-layer output shapes for the whole chain. Throws ShapeError (or
// UnresolvedWeightError) if the chain is inconsistent.
inline std::vector<std::vector<int>> infer_shapes(const Model& m) {
    if (m.input_shape.empty())
        throw ShapeError("model has no input shape");
    std::vector<std::vector<int>> shapes;
    shapes.reserve(m.layers.size());
    std::vector<int> cur = m.input_shape;
    for (const auto& l : m.layers) {
        cur = layer_output_shape(m, l, cur);
        shapes.push_back(cur);
    }
    return shapes;
}

// Full structural validation: every ref resolves, shapes chain end to end,
// weights finite.
inline void validate_model(const Model& m) {
    if (m.embedding_dim <= 0)
        throw ShapeError("model embedding_dim must be positive");
    for (const auto& [name, t] : m.weights)
        if (!t.all_finite())
            throw ShapeError("weight tensor contains non-finite values: " + name);
    auto shapes = infer_shapes(m);
    if (!shapes.empty()) {
        const auto& out = shapes.back();
        int64_t flat = 1;
        for (size_t i = 1; i < out.size(); ++i) flat *= out[i];
        if (out.size() == 2 && flat != m.embedding_dim)
            throw ShapeError("declared embedding_dim does not match model output");
    }
}

} // namespace facepipe
