#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazekit/error.h"

namespace hazekit {

// Dense NCHW float32 tensor. All model math is float32; reductions widen to
// double internally (see kernels.h) but storage is always f32.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    int64_t numel() const { return int64_t(n) * c * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

struct Tensor {
    Shape shape;
    std::vector<float> v;

    Tensor() = default;
    explicit Tensor(Shape s, float fill = 0.0f) : shape(s), v(static_cast<size_t>(s.numel()), fill) {
        if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) throw_shape("negative tensor extent " + s.str());
    }

    static Tensor from(Shape s, std::vector<float> data) {
        if (static_cast<int64_t>(data.size()) != s.numel())
            throw_shape("data size does not match shape " + s.str());
        Tensor t;
        t.shape = s;
        t.v = std::move(data);
        return t;
    }

    int64_t numel() const { return shape.numel(); }
    bool empty() const { return v.empty(); }

    size_t idx(int n, int c, int y, int x) const {
        return ((static_cast<size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x;
    }
    float& at(int n, int c, int y, int x) { return v[idx(n, c, y, x)]; }
    float at(int n, int c, int y, int x) const { return v[idx(n, c, y, x)]; }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
};

// true iff every element is finite (no NaN/Inf)
bool all_finite(const Tensor& t);

// max |a - b| over all elements; shapes must match
float max_abs_diff(const Tensor& a, const Tensor& b);

// bitwise equality (exact float bit patterns)
bool bitwise_equal(const Tensor& a, const Tensor& b);

// copy of `t` with every element clamped to [0, 1]
Tensor clamp01(const Tensor& t);

// slice of images [begin, end) along the batch axis
Tensor batch_slice(const Tensor& t, int begin, int end);

// single image n of a batch as an (1,C,H,W) tensor
inline Tensor nth_image(const Tensor& t, int n) { return batch_slice(t, n, n + 1); }

// 64-bit content hash of shape + raw float bits (fingerprints, freeze checks)
uint64_t tensor_hash(const Tensor& t, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace hazekit
