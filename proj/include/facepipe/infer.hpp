#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "facepipe/model.hpp"

namespace facepipe {

// Reference CNN executor. Convolutions use the cross-correlation convention
// (no kernel flip) with zero padding. One canonical NCHW layout everywhere.

inline Tensor conv2d_f32(const Tensor& in, const Tensor& w, const Tensor* bias,
                         int stride, int pad) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int O = w.dim(0), K = w.dim(2);
    if (w.dim(1) != C)
        throw ShapeError("conv2d_f32: weight/input channel mismatch");
    const int OH = (H + 2 * pad - K) / stride + 1;
    const int OW = (W + 2 * pad - K) / stride + 1;
    Tensor out = Tensor::zeros_f32({N, O, OH, OW});
    const auto x = in.f32();
    const auto k = w.f32();
    auto y = out.f32();
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            const float b = bias ? bias->f32()[o] : 0.0f;
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    float acc = 0.0f;
                    const int h0 = oh * stride - pad;
                    const int w0 = ow * stride - pad;
                    for (int c = 0; c < C; ++c)
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = h0 + kh;
                            if (ih < 0 || ih >= H) continue;
                            const size_t xrow = ((static_cast<size_t>(n) * C + c) * H + ih) * W;
                            const size_t krow = ((static_cast<size_t>(o) * C + c) * K + kh) * K;
                            for (int kw = 0; kw < K; ++kw) {
                                const int iw = w0 + kw;
                                if (iw < 0 || iw >= W) continue;
                                acc += x[xrow + iw] * k[krow + kw];
                            }
                        }
                    y[((static_cast<size_t>(n) * O + o) * OH + oh) * OW + ow] = acc + b;
                }
        }
    return out;
}

inline Tensor depthwise_conv2d_f32(const Tensor& in, const Tensor& w, const Tensor* bias,
                                   int stride, int pad) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int K = w.dim(2);
    if (w.dim(0) != C || w.dim(1) != 1)
        throw ShapeError("depthwise_conv2d_f32: weight must be (C,1,K,K)");
    const int OH = (H + 2 * pad - K) / stride + 1;
    const int OW = (W + 2 * pad - K) / stride + 1;
    Tensor out = Tensor::zeros_f32({N, C, OH, OW});
    const auto x = in.f32();
    const auto k = w.f32();
    auto y = out.f32();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float b = bias ? bias->f32()[c] : 0.0f;
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    float acc = 0.0f;
                    const int h0 = oh * stride - pad;
                    const int w0 = ow * stride - pad;
                    for (int kh = 0; kh < K; ++kh) {
                        const int ih = h0 + kh;
                        if (ih < 0 || ih >= H) continue;
                        const size_t xrow = ((static_cast<size_t>(n) * C + c) * H + ih) * W;
                        const size_t krow = (static_cast<size_t>(c) * K + kh) * K;
                        for (int kw = 0; kw < K; ++kw) {
                            const int iw = w0 + kw;
                            if (iw < 0 || iw >= W) continue;
                            acc += x[xrow + iw] * k[krow + kw];
                        }
                    }
                    y[((static_cast<size_t>(n) * C + c) * OH + oh) * OW + ow] = acc + b;
                }
        }
    return out;
}

inline Tensor linear_f32(const Tensor& in, const Tensor& w, const Tensor* bias) {
    const int N = in.dim(0), I = in.dim(1);
    const int O = w.dim(0);
    if (w.dim(1) != I)
        throw ShapeError("linear_f32: weight/input feature mismatch");
    Tensor out = Tensor::zeros_f32({N, O});
    const auto x = in.f32();
    const auto k = w.f32();
    auto y = out.f32();
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            float acc = bias ? bias->f32()[o] : 0.0f;
            const size_t xrow = static_cast<size_t>(n) * I;
            const size_t krow = static_cast<size_t>(o) * I;
            for (int i = 0; i < I; ++i)
                acc += x[xrow + i] * k[krow + i];
            y[static_cast<size_t>(n) * O + o] = acc;
        }
    return out;
}

// y = x if x >= 0 else alpha_c * x, one slope per channel.
inline Tensor prelu_f32(const Tensor& in, const Tensor& alpha) {
    Tensor out = in;
    auto y = out.f32();
    const auto a = alpha.f32();
    const int C = in.dim(1);
    const size_t per_channel = static_cast<size_t>(in.numel()) / in.dim(0) / C;
    for (size_t i = 0; i < y.size(); ++i) {
        const int c = static_cast<int>((i / per_channel) % C);
        if (y[i] < 0.0f) y[i] *= a[c];
    }
    return out;
}

inline Tensor add_bias_f32(const Tensor& in, const Tensor& bias) {
    Tensor out = in;
    auto y = out.f32();
    const auto b = bias.f32();
    const int C = in.dim(1);
    const size_t per_channel = static_cast<size_t>(in.numel()) / in.dim(0) / C;
    for (size_t i = 0; i < y.size(); ++i)
        y[i] += b[(i / per_channel) % C];
    return out;
}

// Depthwise convolution whose kernel covers the whole spatial plane; the
// usual trick for collapsing a feature map to (C,1,1) with learned weights.
inline Tensor global_depthwise_f32(const Tensor& in, const Tensor& w, const Tensor* bias) {
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    if (w.dim(0) != C || w.dim(2) != H || w.dim(3) != W)
        throw ShapeError("global_depthwise_f32: weight must be (C,1,H,W)");
    Tensor out = Tensor::zeros_f32({N, C, 1, 1});
    const auto x = in.f32();
    const auto k = w.f32();
    auto y = out.f32();
    const size_t plane = static_cast<size_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            float acc = bias ? bias->f32()[c] : 0.0f;
            const size_t xo = (static_cast<size_t>(n) * C + c) * plane;
            const size_t ko = static_cast<size_t>(c) * plane;
            for (size_t i = 0; i < plane; ++i)
                acc += x[xo + i] * k[ko + i];
            y[static_cast<size_t>(n) * C + c] = acc;
        }
    return out;
}

inline Tensor flatten_f32(const Tensor& in) {
    const int N = in.dim(0);
    const int F = static_cast<int>(in.numel() / N);
    std::vector<float> data(in.f32().begin(), in.f32().end());
    return Tensor::from_f32({N, F}, std::move(data));
}

inline Tensor l2norm_f32(const Tensor& in) {
    Tensor out = in;
    auto y = out.f32();
    const int N = in.dim(0);
    const size_t F = y.size() / N;
    for (int n = 0; n < N; ++n) {
        double ss = 0.0;
        for (size_t i = 0; i < F; ++i) {
            const double v = y[n * F + i];
            ss += v * v;
        }
        const double inv = 1.0 / std::sqrt(std::max(ss, 1e-24));
        for (size_t i = 0; i < F; ++i)
            y[n * F + i] = static_cast<float>(y[n * F + i] * inv);
    }
    return out;
}

namespace detail {

inline Tensor run_layer_f32(const Model& m, const LayerSpec& l, const Tensor& x) {
    const Tensor* bias = nullptr;
    if (!l.bias.empty()) bias = &m.weight(l.bias);
    switch (l.kind) {
        case LayerKind::conv2d:
            return conv2d_f32(x, m.weight(l.weight), bias, l.stride, l.pad);
        case LayerKind::depthwise_conv2d:
            return depthwise_conv2d_f32(x, m.weight(l.weight), bias, l.stride, l.pad);
        case LayerKind::linear:
            return linear_f32(x, m.weight(l.weight), bias);
        case LayerKind::prelu:
            return prelu_f32(x, m.weight(l.weight));
        case LayerKind::add_bias:
            return add_bias_f32(x, m.weight(l.bias.empty() ? l.weight : l.bias));
        case LayerKind::global_depthwise:
            return global_depthwise_f32(x, m.weight(l.weight), bias);
        case LayerKind::flatten:
            return flatten_f32(x);
        case LayerKind::l2norm:
            return l2norm_f32(x);
    }
    throw ShapeError("unhandled layer kind");
}

} // namespace detail

inline void check_forward_input(const Model& m, const Tensor& input) {
    if (input.dtype() != DType::f32)
        throw InvalidInputError("forward: input must be f32");
    if (input.shape() != m.input_shape)
        throw InvalidInputError("forward: input shape does not match model input shape");
}

inline Tensor forward_f32(const Model& m, const Tensor& input) {
    check_forward_input(m, input);
    Tensor cur = input;
    for (const auto& l : m.layers)
        cur = detail::run_layer_f32(m, l, cur);
    return cur;
}

// forward_f32 that also hands every intermediate activation to `observe`
// (layer index, output). Used by calibration.
inline Tensor forward_f32_trace(const Model& m, const Tensor& input,
                                const std::function<void(size_t, const Tensor&)>& observe) {
    check_forward_input(m, input);
    Tensor cur = input;
    for (size_t i = 0; i < m.layers.size(); ++i) {
        cur = detail::run_layer_f32(m, m.layers[i], cur);
        observe(i, cur);
    }
    return cur;
}

// --- post-training quantization -------------------------------------------

constexpr float kQuantScaleFloor = 1e-8f; // degenerate all-zero calibration

inline int8_t quantize_value(float x, float scale) {
    const float q = std::round(x / scale);
    return static_cast<int8_t>(std::clamp(q, -127.0f, 127.0f));
}

inline float dequantize_value(int8_t q, float scale) {
    return static_cast<float>(q) * scale;
}

inline Tensor quantize_tensor(const Tensor& t, float scale) {
    std::vector<int8_t> q(static_cast<size_t>(t.numel()));
    const auto x = t.f32();
    for (size_t i = 0; i < q.size(); ++i)
        q[i] = quantize_value(x[i], scale);
    return Tensor::from_i8(t.shape(), std::move(q), scale);
}

inline Tensor dequantize_tensor(const Tensor& t) {
    std::vector<float> x(static_cast<size_t>(t.numel()));
    const auto q = t.i8();
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = dequantize_value(q[i], t.qscale());
    return Tensor::from_f32(t.shape(), std::move(x));
}

inline float absmax_scale(std::span<const float> v) {
    float m = 0.0f;
    for (float x : v) m = std::max(m, std::abs(x));
    return std::max(m / 127.0f, kQuantScaleFloor);
}

struct Calibration {
    QuantParams input;                        // scale for the model input
    std::vector<QuantParams> layer_out;       // one per layer, output activations
    std::map<std::string, QuantParams> weight; // per-tensor weight scales
};

// Min/max calibration: scale = max(|min|,|max|)/127 over all samples, per
// layer output (and for the input itself); weight scales per tensor.
inline Calibration calibrate(const Model& m, std::span<const Tensor> samples) {
    if (samples.empty())
        throw InvalidInputError("calibrate: sample set must be non-empty");
    Calibration cal;
    std::vector<float> peak(m.layers.size(), 0.0f);
    float input_peak = 0.0f;
    for (const auto& s : samples) {
        for (float v : s.f32()) input_peak = std::max(input_peak, std::abs(v));
        forward_f32_trace(m, s, [&](size_t i, const Tensor& out) {
            for (float v : out.f32()) peak[i] = std::max(peak[i], std::abs(v));
        });
    }
    cal.input.scale = std::max(input_peak / 127.0f, kQuantScaleFloor);
    cal.layer_out.resize(m.layers.size());
    for (size_t i = 0; i < peak.size(); ++i)
        cal.layer_out[i].scale = std::max(peak[i] / 127.0f, kQuantScaleFloor);
    for (const auto& [name, t] : m.weights) {
        if (t.dtype() != DType::f32) continue;
        cal.weight[name] = QuantParams{absmax_scale(t.f32())};
    }
    return cal;
}

inline bool is_kernel_layer(LayerKind k) {
    return k == LayerKind::conv2d || k == LayerKind::depthwise_conv2d ||
           k == LayerKind::global_depthwise || k == LayerKind::linear;
}

// Symmetric per-tensor int8 model: kernels of conv/depthwise/global/linear
// layers become i8 tensors, biases and prelu slopes stay f32, activation
// scales are recorded on each layer. The integer segment ends at the first
// l2norm; anything after it executes in f32 and keeps float weights.
inline Model quantize_model(const Model& m, const Calibration& cal) {
    if (cal.layer_out.size() != m.layers.size())
        throw InvalidInputError("quantize_model: calibration does not cover every layer");
    Model q = m;
    bool integer_segment = true;
    for (size_t i = 0; i < q.layers.size(); ++i) {
        auto& l = q.layers[i];
        if (!integer_segment) continue;
        l.in_scale = i == 0 ? cal.input.scale : q.layers[i - 1].out_scale;
        l.out_scale = cal.layer_out[i].scale;
        // flatten just reshapes; keep the scale so the ints pass through
        if (l.kind == LayerKind::flatten) l.out_scale = l.in_scale;
        if (is_kernel_layer(l.kind)) {
            auto it = cal.weight.find(l.weight);
            if (it == cal.weight.end())
                throw ModelError("quantize_model: missing weight scale for " + l.weight);
            q.weights[l.weight] = quantize_tensor(m.weight(l.weight), it->second.scale);
        }
        if (l.kind == LayerKind::l2norm) integer_segment = false;
    }
    return q;
}

namespace detail {

struct QuantAct {
    std::vector<int8_t> q;
    std::vector<int> shape;
    float scale = 0.0f;
};

inline void require_scales(const LayerSpec& l) {
    if (!(l.in_scale > 0.0f) || !(l.out_scale > 0.0f))
        throw ModelError("forward_i8: layer is missing quantization scales");
}

// int32 accumulation over i8 activations and i8 kernel, then requantize to
// the layer's output scale. Bias is applied in real units.
inline QuantAct conv_like_i8(const QuantAct& in, const Tensor& w, const Tensor* bias,
                             int stride, int pad, bool depthwise, float out_scale) {
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int K = w.dim(2);
    const int O = depthwise ? C : w.dim(0);
    const int OH = (H + 2 * pad - K) / stride + 1;
    const int OW = (W + 2 * pad - K) / stride + 1;
    QuantAct out;
    out.shape = {N, O, OH, OW};
    out.scale = out_scale;
    out.q.resize(static_cast<size_t>(N) * O * OH * OW);
    const auto k = w.i8();
    const float acc_scale = in.scale * w.qscale();
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            const float b = bias ? bias->f32()[o] : 0.0f;
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    int32_t acc = 0;
                    const int h0 = oh * stride - pad;
                    const int w0 = ow * stride - pad;
                    const int c_begin = depthwise ? o : 0;
                    const int c_end = depthwise ? o + 1 : C;
                    for (int c = c_begin; c < c_end; ++c)
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = h0 + kh;
                            if (ih < 0 || ih >= H) continue;
                            const size_t xrow =
                                ((static_cast<size_t>(n) * C + c) * H + ih) * W;
                            const size_t krow = depthwise
                                ? (static_cast<size_t>(o) * K + kh) * K
                                : ((static_cast<size_t>(o) * C + c) * K + kh) * K;
                            for (int kw = 0; kw < K; ++kw) {
                                const int iw = w0 + kw;
                                if (iw < 0 || iw >= W) continue;
                                acc += static_cast<int32_t>(in.q[xrow + iw]) *
                                       static_cast<int32_t>(k[krow + kw]);
                            }
                        }
                    const float real = acc * acc_scale + b;
                    out.q[((static_cast<size_t>(n) * O + o) * OH + oh) * OW + ow] =
                        quantize_value(real, out_scale);
                }
        }
    return out;
}

} // namespace detail

// Quantized forward pass. Takes the same f32 input as forward_f32, quantizes
// it with the calibrated input scale, runs the integer chain, and returns the
// final activation dequantized to f32.
inline Tensor forward_i8(const Model& m, const Tensor& input) {
    check_forward_input(m, input);
    // every kernel layer of the integer segment must carry i8 weights
    for (const auto& l : m.layers) {
        if (l.kind == LayerKind::l2norm) break;
        if (is_kernel_layer(l.kind) && m.weight(l.weight).dtype() != DType::i8)
            throw ModelError("forward_i8: model weights are not quantized");
    }
    if (m.layers.empty())
        return input;

    detail::require_scales(m.layers.front());
    detail::QuantAct act;
    act.shape = input.shape();
    act.scale = m.layers.front().in_scale;
    act.q.resize(static_cast<size_t>(input.numel()));
    {
        const auto x = input.f32();
        for (size_t i = 0; i < act.q.size(); ++i)
            act.q[i] = quantize_value(x[i], act.scale);
    }

    bool is_f32_tail = false; // after l2norm the activation is real-valued
    Tensor f32_act;
    for (size_t li = 0; li < m.layers.size(); ++li) {
        const auto& l = m.layers[li];
        const Tensor* bias = l.bias.empty() ? nullptr : &m.weight(l.bias);
        if (is_f32_tail) {
            // run the remainder of the chain in f32 (only reachable when a
            // normalization layer is not last)
            f32_act = detail::run_layer_f32(m, l, f32_act);
            continue;
        }
        detail::require_scales(l);
        switch (l.kind) {
            case LayerKind::conv2d:
                act = detail::conv_like_i8(act, m.weight(l.weight), bias, l.stride, l.pad,
                                           false, l.out_scale);
                break;
            case LayerKind::depthwise_conv2d:
                act = detail::conv_like_i8(act, m.weight(l.weight), bias, l.stride, l.pad,
                                           true, l.out_scale);
                break;
            case LayerKind::global_depthwise: {
                detail::QuantAct out;
                const int N = act.shape[0], C = act.shape[1];
                const size_t plane =
                    static_cast<size_t>(act.shape[2]) * act.shape[3];
                const Tensor& w = m.weight(l.weight);
                out.shape = {N, C, 1, 1};
                out.scale = l.out_scale;
                out.q.resize(static_cast<size_t>(N) * C);
                const float acc_scale = act.scale * w.qscale();
                const auto k = w.i8();
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        int32_t acc = 0;
                        const size_t xo = (static_cast<size_t>(n) * C + c) * plane;
                        const size_t ko = static_cast<size_t>(c) * plane;
                        for (size_t i = 0; i < plane; ++i)
                            acc += static_cast<int32_t>(act.q[xo + i]) *
                                   static_cast<int32_t>(k[ko + i]);
                        const float b = bias ? bias->f32()[c] : 0.0f;
                        out.q[static_cast<size_t>(n) * C + c] =
                            quantize_value(acc * acc_scale + b, l.out_scale);
                    }
                act = std::move(out);
                break;
            }
            case LayerKind::linear: {
                detail::QuantAct out;
                const int N = act.shape[0], I = act.shape[1];
                const Tensor& w = m.weight(l.weight);
                const int O = w.dim(0);
                out.shape = {N, O};
                out.scale = l.out_scale;
                out.q.resize(static_cast<size_t>(N) * O);
                const float acc_scale = act.scale * w.qscale();
                const auto k = w.i8();
                for (int n = 0; n < N; ++n)
                    for (int o = 0; o < O; ++o) {
                        int32_t acc = 0;
                        for (int i = 0; i < I; ++i)
                            acc += static_cast<int32_t>(act.q[static_cast<size_t>(n) * I + i]) *
                                   static_cast<int32_t>(k[static_cast<size_t>(o) * I + i]);
                        const float b = bias ? bias->f32()[o] : 0.0f;
                        out.q[static_cast<size_t>(n) * O + o] =
                            quantize_value(acc * acc_scale + b, l.out_scale);
                    }
                act = std::move(out);
                break;
            }
            case LayerKind::prelu: {
                const auto a = m.weight(l.weight).f32();
                const int C = act.shape[1];
                size_t per_channel = act.q.size() / act.shape[0] / C;
                detail::QuantAct out;
                out.shape = act.shape;
                out.scale = l.out_scale;
                out.q.resize(act.q.size());
                for (size_t i = 0; i < act.q.size(); ++i) {
                    float v = act.q[i] * act.scale;
                    if (v < 0.0f) v *= a[(i / per_channel) % C];
                    out.q[i] = quantize_value(v, l.out_scale);
                }
                act = std::move(out);
                break;
            }
            case LayerKind::add_bias: {
                const auto b = m.weight(l.bias.empty() ? l.weight : l.bias).f32();
                const int C = act.shape[1];
                size_t per_channel = act.q.size() / act.shape[0] / C;
                detail::QuantAct out;
                out.shape = act.shape;
                out.scale = l.out_scale;
                out.q.resize(act.q.size());
                for (size_t i = 0; i < act.q.size(); ++i)
                    out.q[i] = quantize_value(act.q[i] * act.scale + b[(i / per_channel) % C],
                                              l.out_scale);
                act = std::move(out);
                break;
            }
            case LayerKind::flatten: {
                const int N = act.shape[0];
                int64_t f = 1;
                for (size_t i = 1; i < act.shape.size(); ++i) f *= act.shape[i];
                act.shape = {N, static_cast<int>(f)};
                break;
            }
            case LayerKind::l2norm: {
                // dequantize and normalize; the tail is real-valued from here
                std::vector<float> v(act.q.size());
                for (size_t i = 0; i < v.size(); ++i)
                    v[i] = act.q[i] * act.scale;
                f32_act = l2norm_f32(Tensor::from_f32(act.shape, std::move(v)));
                is_f32_tail = true;
                break;
            }
        }
    }

    if (is_f32_tail)
        return f32_act;
    std::vector<float> v(act.q.size());
    for (size_t i = 0; i < v.size(); ++i)
        v[i] = act.q[i] * act.scale;
    return Tensor::from_f32(act.shape, std::move(v));
}

// 2 FLOPs per multiply-accumulate, summed over layer outputs.
inline int64_t count_flops(const Model& m) {
    int64_t total = 0;
    if (m.layers.empty()) return 0;
    auto shapes = infer_shapes(m);
    std::vector<int> in = m.input_shape;
    for (size_t i = 0; i < m.layers.size(); ++i) {
        const auto& l = m.layers[i];
        const auto& out = shapes[i];
        int64_t out_elems = 1;
        for (int d : out) out_elems *= d;
        int64_t ops_per_elem = 0;
        switch (l.kind) {
            case LayerKind::conv2d:
                ops_per_elem = static_cast<int64_t>(l.kernel) * l.kernel * in[1];
                break;
            case LayerKind::depthwise_conv2d:
                ops_per_elem = static_cast<int64_t>(l.kernel) * l.kernel;
                break;
            case LayerKind::linear:
                ops_per_elem = in[1];
                break;
            case LayerKind::global_depthwise:
                ops_per_elem = static_cast<int64_t>(in[2]) * in[3];
                break;
            case LayerKind::prelu:
            case LayerKind::add_bias:
                ops_per_elem = 1;
                break;
            case LayerKind::flatten:
                ops_per_elem = 0;
                break;
            case LayerKind::l2norm:
                ops_per_elem = 2; // sum-of-squares MAC plus the rescale
                break;
        }
        total += 2 * out_elems * ops_per_elem;
        in = out;
    }
    return total;
}

} // namespace facepipe
