#include "hazekit/tensor.h"

#include <cmath>
#include <cstring>

#include "hazekit/kernels.h"
#include "hazekit/rng.h"

namespace hazekit {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

bool all_finite(const Tensor& t) {
    for (float x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!(a.shape == b.shape)) throw_shape("max_abs_diff shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    float m = 0.0f;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const float d = std::fabs(a.v[i] - b.v[i]);
        if (d > m) m = d;
    }
    return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!(a.shape == b.shape)) return false;
    return a.v.empty() || std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(float)) == 0;
}

Tensor clamp01(const Tensor& t) {
    Tensor out(t.shape);
    kernels::active().clamp01(t.data(), out.data(), t.v.size());
    return out;
}

Tensor batch_slice(const Tensor& t, int begin, int end) {
    if (begin < 0 || end > t.shape.n || begin >= end) throw_shape("bad batch slice");
    Tensor out(Shape{end - begin, t.shape.c, t.shape.h, t.shape.w});
    const size_t img = static_cast<size_t>(t.shape.c) * t.shape.h * t.shape.w;
    std::memcpy(out.data(), t.data() + static_cast<size_t>(begin) * img,
                (static_cast<size_t>(end) - begin) * img * sizeof(float));
    return out;
}

uint64_t tensor_hash(const Tensor& t, uint64_t seed) {
    uint64_t h = fnv1a64(&t.shape, sizeof(t.shape), seed);
    if (!t.v.empty()) h = fnv1a64(t.v.data(), t.v.size() * sizeof(float), h);
    return h;
}

}  // namespace hazekit
