#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "facepipe/error.hpp"

namespace facepipe {

enum class DType { f32, i8 };

// N-dimensional numeric array, row-major, NCHW for 4-D. Either f32 or
// symmetric-quantized i8 (value = qscale * int). Immutable by convention once
// handed to a Model; operations return fresh tensors.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros_f32(std::vector<int> shape) {
        Tensor t;
        t.shape_ = std::move(shape);
        t.dtype_ = DType::f32;
        t.f_.assign(static_cast<size_t>(numel_of(t.shape_)), 0.0f);
        return t;
    }

    static Tensor from_f32(std::vector<int> shape, std::vector<float> data) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw InvalidInputError("tensor data size does not match shape");
        Tensor t;
        t.shape_ = std::move(shape);
        t.dtype_ = DType::f32;
        t.f_ = std::move(data);
        return t;
    }

    static Tensor from_i8(std::vector<int> shape, std::vector<int8_t> data, float qscale) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw InvalidInputError("tensor data size does not match shape");
        if (!(qscale > 0.0f))
            throw InvalidInputError("quantized tensor requires positive qscale");
        Tensor t;
        t.shape_ = std::move(shape);
        t.dtype_ = DType::i8;
        t.q_ = std::move(data);
        t.qscale_ = qscale;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    DType dtype() const { return dtype_; }
    float qscale() const { return qscale_; }

    int64_t numel() const { return numel_of(shape_); }
    int dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }

    std::span<const float> f32() const { return f_; }
    std::span<float> f32() { return f_; }
    std::span<const int8_t> i8() const { return q_; }
    std::span<int8_t> i8() { return q_; }

    // NCHW element access, f32 only.
    float at4(int n, int c, int h, int w) const {
        return f_[index4(n, c, h, w)];
    }
    float& at4(int n, int c, int h, int w) {
        return f_[index4(n, c, h, w)];
    }

    size_t index4(int n, int c, int h, int w) const {
        return ((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    bool all_finite() const {
        if (dtype_ != DType::f32) return true;
        for (float v : f_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static int64_t numel_of(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw InvalidInputError("tensor dimensions must be positive");
            n *= d;
        }
        return n;
    }

private:
    std::vector<int> shape_;
    DType dtype_ = DType::f32;
    std::vector<float> f_;
    std::vector<int8_t> q_;
    float qscale_ = 0.0f;
};

} // namespace facepipe
