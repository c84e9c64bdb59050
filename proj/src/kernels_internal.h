#pragma once

// Shared between the backend TUs and the dispatcher. Not installed.

#include <vector>

#include "hazekit/kernels.h"

namespace hazekit::kernels {

// Row slack so wide loads in the dW kernel may read a few floats past the
// padded row end; the slack is zeroed and the extra lanes are discarded.
inline constexpr int kPadRowSlack = 8;

inline int padded_h(const ConvDims& d) { return d.in_h + 2 * d.pad; }
inline int padded_row(const ConvDims& d) { return d.in_w + 2 * d.pad + kPadRowSlack; }

// Copies the whole batch into a zero-padded scratch laid out as
// [n][ic][padded_h][padded_row]. Every backend accumulates over all kh*kw
// taps including the explicit zeros, so tap counts (and thus rounding
// sequences) are identical everywhere.
inline void fill_padded(const float* in, const ConvDims& d, std::vector<float>& buf) {
    const int ph = padded_h(d), prow = padded_row(d);
    buf.assign(static_cast<size_t>(d.n) * d.in_c * ph * prow, 0.0f);
    for (int n = 0; n < d.n; ++n)
        for (int ic = 0; ic < d.in_c; ++ic)
            for (int y = 0; y < d.in_h; ++y) {
                const float* src = in + ((static_cast<size_t>(n) * d.in_c + ic) * d.in_h + y) * d.in_w;
                float* dst = buf.data() + ((static_cast<size_t>(n) * d.in_c + ic) * ph + (y + d.pad)) * prow + d.pad;
                for (int x = 0; x < d.in_w; ++x) dst[x] = src[x];
            }
}

// scalar reference kernels (also the tail/fallback path of the SIMD TUs)
void conv2d_fwd_scalar(const float* in, const float* w, const float* bias, float* out, const ConvDims& d);
void conv2d_dw_scalar(const float* in, const float* gout, float* dw, const ConvDims& d);
void add_scalar_k(const float* a, const float* b, float* out, size_t n);
void sub_scalar_k(const float* a, const float* b, float* out, size_t n);
void mul_scalar_k(const float* a, const float* b, float* out, size_t n);
void div_scalar_k(const float* a, const float* b, float* out, size_t n);
void relu_scalar_k(const float* a, float* out, size_t n);
void clamp01_scalar_k(const float* a, float* out, size_t n);
void scale_scalar_k(const float* a, float s, float* out, size_t n);
void add_scalar_scalar_k(const float* a, float s, float* out, size_t n);
void acc_scalar_k(float* dst, const float* a, size_t n);
void macc_scalar_k(float* dst, const float* a, const float* b, size_t n);
void axpy_scalar_k(float* dst, float s, const float* a, size_t n);
void relu_bwd_scalar_k(float* dst, const float* gout, const float* x, size_t n);
void clamp01_bwd_scalar_k(float* dst, const float* gout, const float* x, size_t n);

// Backend tables; only the ones actually compiled in are ever referenced.
extern const Table kScalarTable;
extern const Table kAvx2Table;
extern const Table kNeonTable;

}  // namespace hazekit::kernels
