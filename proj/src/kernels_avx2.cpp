// AVX2 backend. Built with -mavx2 and without -mfma: every multiply-add is an
// explicit mul followed by an add so lane results match the scalar backend
// bit for bit. Vector lanes always hold independent output elements; each
// lane replays the scalar reduction order.

#include <immintrin.h>

#include "kernels_internal.h"

namespace hazekit::kernels {

namespace {

thread_local std::vector<float> g_pad_fwd;
thread_local std::vector<float> g_pad_dw;

// one output element from the padded scratch, identical to the scalar kernel
inline float conv_one(const float* pn, const float* wc, double bias, size_t ch_stride, int prow, int oh,
                      int ow, const ConvDims& d) {
    double acc = bias;
    const float* wp = wc;
    for (int ic = 0; ic < d.in_c; ++ic) {
        const float* prow0 =
            pn + ic * ch_stride + static_cast<size_t>(oh) * prow + static_cast<size_t>(ow);
        for (int ky = 0; ky < d.kh; ++ky) {
            const float* irow = prow0 + static_cast<size_t>(ky) * prow;
            for (int kx = 0; kx < d.kw; ++kx)
                acc += static_cast<double>(irow[kx]) * static_cast<double>(*wp++);
        }
    }
    return static_cast<float>(acc);
}

void conv2d_fwd_avx2(const float* in, const float* w, const float* bias, float* out, const ConvDims& d) {
    if (d.stride != 1) {
        conv2d_fwd_scalar(in, w, bias, out, d);
        return;
    }
    const int prow = padded_row(d);
    fill_padded(in, d, g_pad_fwd);
    const float* pin = g_pad_fwd.data();
    const size_t ch_stride = static_cast<size_t>(padded_h(d)) * prow;
    for (int n = 0; n < d.n; ++n) {
        const float* pn = pin + static_cast<size_t>(n) * d.in_c * ch_stride;
        for (int oc = 0; oc < d.out_c; ++oc) {
            const float* wc = w + static_cast<size_t>(oc) * d.in_c * d.kh * d.kw;
            const double b = bias[oc];
            const __m256d bv = _mm256_set1_pd(b);
            for (int oh = 0; oh < d.out_h; ++oh) {
                float* orow = out + ((static_cast<size_t>(n) * d.out_c + oc) * d.out_h + oh) * d.out_w;
                int ow = 0;
                for (; ow + 8 <= d.out_w; ow += 8) {
                    __m256d acc0 = bv, acc1 = bv;
                    const float* wp = wc;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        const float* prow0 = pn + ic * ch_stride + static_cast<size_t>(oh) * prow + ow;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            const float* irow = prow0 + static_cast<size_t>(ky) * prow;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const __m256 f8 = _mm256_loadu_ps(irow + kx);
                                const __m256d wv = _mm256_set1_pd(static_cast<double>(*wp++));
                                acc0 = _mm256_add_pd(
                                    acc0, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(f8)), wv));
                                acc1 = _mm256_add_pd(
                                    acc1, _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(f8, 1)), wv));
                            }
                        }
                    }
                    _mm256_storeu_ps(orow + ow,
                                     _mm256_set_m128(_mm256_cvtpd_ps(acc1), _mm256_cvtpd_ps(acc0)));
                }
                for (; ow + 4 <= d.out_w; ow += 4) {
                    __m256d acc = bv;
                    const float* wp = wc;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        const float* prow0 = pn + ic * ch_stride + static_cast<size_t>(oh) * prow + ow;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            const float* irow = prow0 + static_cast<size_t>(ky) * prow;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const __m128 f4 = _mm_loadu_ps(irow + kx);
                                const __m256d wv = _mm256_set1_pd(static_cast<double>(*wp++));
                                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_cvtps_pd(f4), wv));
                            }
                        }
                    }
                    _mm_storeu_ps(orow + ow, _mm256_cvtpd_ps(acc));
                }
                for (; ow < d.out_w; ++ow) orow[ow] = conv_one(pn, wc, b, ch_stride, prow, oh, ow, d);
            }
        }
    }
}

void conv2d_dw_avx2(const float* in, const float* gout, float* dw, const ConvDims& d) {
    if (d.stride != 1) {
        conv2d_dw_scalar(in, gout, dw, d);
        return;
    }
    const int prow = padded_row(d);
    fill_padded(in, d, g_pad_dw);
    const float* pin = g_pad_dw.data();
    const size_t ch_stride = static_cast<size_t>(padded_h(d)) * prow;
    const size_t gplane = static_cast<size_t>(d.out_h) * d.out_w;
    for (int oc = 0; oc < d.out_c; ++oc)
        for (int ic = 0; ic < d.in_c; ++ic)
            for (int ky = 0; ky < d.kh; ++ky)
                for (int kx0 = 0; kx0 < d.kw; kx0 += 4) {
                    const int lanes = d.kw - kx0 < 4 ? d.kw - kx0 : 4;
                    __m256d acc = _mm256_setzero_pd();
                    for (int n = 0; n < d.n; ++n) {
                        const float* g0 = gout + (static_cast<size_t>(n) * d.out_c + oc) * gplane;
                        const float* p0 = pin + static_cast<size_t>(n) * d.in_c * ch_stride +
                                          ic * ch_stride + static_cast<size_t>(ky) * prow + kx0;
                        for (int oh = 0; oh < d.out_h; ++oh) {
                            const float* grow = g0 + static_cast<size_t>(oh) * d.out_w;
                            const float* irow = p0 + static_cast<size_t>(oh) * prow;
                            for (int ow = 0; ow < d.out_w; ++ow) {
                                const __m256d g = _mm256_set1_pd(static_cast<double>(grow[ow]));
                                const __m256d in4 = _mm256_cvtps_pd(_mm_loadu_ps(irow + ow));
                                acc = _mm256_add_pd(acc, _mm256_mul_pd(in4, g));
                            }
                        }
                    }
                    alignas(32) double lane[4];
                    _mm256_storeu_pd(lane, acc);
                    float* dst = dw + ((static_cast<size_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx0;
                    for (int l = 0; l < lanes; ++l) dst[l] = static_cast<float>(lane[l]);
                }
}

void add_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}
void div_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_div_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] / b[i];
}
void relu_avx2(const float* a, float* out, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 x = _mm256_loadu_ps(a + i);
        const __m256 m = _mm256_cmp_ps(x, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(out + i, _mm256_blendv_ps(zero, x, m));
    }
    for (; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}
void clamp01_avx2(const float* a, float* out, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 x = _mm256_loadu_ps(a + i);
        __m256 r = _mm256_blendv_ps(x, zero, _mm256_cmp_ps(x, zero, _CMP_LT_OQ));
        r = _mm256_blendv_ps(r, one, _mm256_cmp_ps(x, one, _CMP_GT_OQ));
        _mm256_storeu_ps(out + i, r);
    }
    for (; i < n; ++i) {
        float x = a[i];
        out[i] = x < 0.0f ? 0.0f : (x > 1.0f ? 1.0f : x);
    }
}
void scale_avx2(const float* a, float s, float* out, size_t n) {
    const __m256 sv = _mm256_set1_ps(s);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), sv));
    for (; i < n; ++i) out[i] = a[i] * s;
}
void add_scalar_avx2(const float* a, float s, float* out, size_t n) {
    const __m256 sv = _mm256_set1_ps(s);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), sv));
    for (; i < n; ++i) out[i] = a[i] + s;
}
void acc_avx2(float* dst, const float* a, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i), _mm256_loadu_ps(a + i)));
    for (; i < n; ++i) dst[i] += a[i];
}
void macc_avx2(float* dst, const float* a, const float* b, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 t = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i), t));
    }
    for (; i < n; ++i) {
        float t = a[i] * b[i];
        dst[i] += t;
    }
}
void axpy_avx2(float* dst, float s, const float* a, size_t n) {
    const __m256 sv = _mm256_set1_ps(s);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 t = _mm256_mul_ps(sv, _mm256_loadu_ps(a + i));
        _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i), t));
    }
    for (; i < n; ++i) {
        float t = s * a[i];
        dst[i] += t;
    }
}
// Masked lanes keep the original dst bits (not dst+0.0) so results match the
// scalar skip-the-add form even for signed zeros.
void relu_bwd_avx2(float* dst, const float* gout, const float* x, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 m = _mm256_cmp_ps(xv, zero, _CMP_GT_OQ);
        const __m256 dv = _mm256_loadu_ps(dst + i);
        const __m256 sum = _mm256_add_ps(dv, _mm256_loadu_ps(gout + i));
        _mm256_storeu_ps(dst + i, _mm256_blendv_ps(dv, sum, m));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f) dst[i] += gout[i];
}
void clamp01_bwd_avx2(float* dst, const float* gout, const float* x, size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 m =
            _mm256_and_ps(_mm256_cmp_ps(xv, zero, _CMP_GT_OQ), _mm256_cmp_ps(xv, one, _CMP_LT_OQ));
        const __m256 dv = _mm256_loadu_ps(dst + i);
        const __m256 sum = _mm256_add_ps(dv, _mm256_loadu_ps(gout + i));
        _mm256_storeu_ps(dst + i, _mm256_blendv_ps(dv, sum, m));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f && x[i] < 1.0f) dst[i] += gout[i];
}

}  // namespace

const Table kAvx2Table = {
    conv2d_fwd_avx2, conv2d_dw_avx2,
    add_avx2,        sub_avx2,        mul_avx2,   div_avx2,
    relu_avx2,       clamp01_avx2,    scale_avx2, add_scalar_avx2,
    acc_avx2,        macc_avx2,       axpy_avx2,  relu_bwd_avx2,
    clamp01_bwd_avx2,
};

}  // namespace hazekit::kernels
