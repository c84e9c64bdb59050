#include "kernels_internal.h"

namespace hazekit::kernels {

namespace {
thread_local std::vector<float> g_pad_fwd;
thread_local std::vector<float> g_pad_dw;
}  // namespace

void conv2d_fwd_scalar(const float* in, const float* w, const float* bias, float* out, const ConvDims& d) {
    const int ph = padded_h(d), prow = padded_row(d);
    (void)ph;
    fill_padded(in, d, g_pad_fwd);
    const float* pin = g_pad_fwd.data();
    const size_t ch_stride = static_cast<size_t>(padded_h(d)) * prow;
    for (int n = 0; n < d.n; ++n) {
        const float* pn = pin + static_cast<size_t>(n) * d.in_c * ch_stride;
        for (int oc = 0; oc < d.out_c; ++oc) {
            const float* wc = w + static_cast<size_t>(oc) * d.in_c * d.kh * d.kw;
            const double b = bias[oc];
            for (int oh = 0; oh < d.out_h; ++oh) {
                float* orow = out + ((static_cast<size_t>(n) * d.out_c + oc) * d.out_h + oh) * d.out_w;
                for (int ow = 0; ow < d.out_w; ++ow) {
                    double acc = b;
                    const float* wp = wc;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        const float* prow0 = pn + ic * ch_stride + static_cast<size_t>(oh * d.stride) * prow +
                                             static_cast<size_t>(ow) * d.stride;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            const float* irow = prow0 + static_cast<size_t>(ky) * prow;
                            for (int kx = 0; kx < d.kw; ++kx)
                                acc += static_cast<double>(irow[kx]) * static_cast<double>(*wp++);
                        }
                    }
                    orow[ow] = static_cast<float>(acc);
                }
            }
        }
    }
}

void conv2d_dw_scalar(const float* in, const float* gout, float* dw, const ConvDims& d) {
    const int prow = padded_row(d);
    fill_padded(in, d, g_pad_dw);
    const float* pin = g_pad_dw.data();
    const size_t ch_stride = static_cast<size_t>(padded_h(d)) * prow;
    for (int oc = 0; oc < d.out_c; ++oc)
        for (int ic = 0; ic < d.in_c; ++ic)
            for (int ky = 0; ky < d.kh; ++ky)
                for (int kx = 0; kx < d.kw; ++kx) {
                    double acc = 0.0;
                    for (int n = 0; n < d.n; ++n) {
                        const float* g0 = gout + (static_cast<size_t>(n) * d.out_c + oc) *
                                                     (static_cast<size_t>(d.out_h) * d.out_w);
                        const float* p0 = pin + static_cast<size_t>(n) * d.in_c * ch_stride + ic * ch_stride +
                                          static_cast<size_t>(ky) * prow + kx;
                        for (int oh = 0; oh < d.out_h; ++oh) {
                            const float* grow = g0 + static_cast<size_t>(oh) * d.out_w;
                            const float* irow = p0 + static_cast<size_t>(oh * d.stride) * prow;
                            for (int ow = 0; ow < d.out_w; ++ow)
                                acc += static_cast<double>(grow[ow]) *
                                       static_cast<double>(irow[static_cast<size_t>(ow) * d.stride]);
                        }
                    }
                    dw[((static_cast<size_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx] =
                        static_cast<float>(acc);
                }
}

void add_scalar_k(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_scalar_k(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_scalar_k(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void div_scalar_k(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}
void relu_scalar_k(const float* a, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0f ? a[i] : 0.0f;
}
void clamp01_scalar_k(const float* a, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        float x = a[i];
        out[i] = x < 0.0f ? 0.0f : (x > 1.0f ? 1.0f : x);
    }
}
void scale_scalar_k(const float* a, float s, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}
void add_scalar_scalar_k(const float* a, float s, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + s;
}
void acc_scalar_k(float* dst, const float* a, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] += a[i];
}
void macc_scalar_k(float* dst, const float* a, const float* b, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        float t = a[i] * b[i];
        dst[i] += t;
    }
}
void axpy_scalar_k(float* dst, float s, const float* a, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        float t = s * a[i];
        dst[i] += t;
    }
}
void relu_bwd_scalar_k(float* dst, const float* gout, const float* x, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] > 0.0f) dst[i] += gout[i];
}
void clamp01_bwd_scalar_k(float* dst, const float* gout, const float* x, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] > 0.0f && x[i] < 1.0f) dst[i] += gout[i];
}

const Table kScalarTable = {
    conv2d_fwd_scalar, conv2d_dw_scalar,
    add_scalar_k,      sub_scalar_k,      mul_scalar_k,  div_scalar_k,
    relu_scalar_k,     clamp01_scalar_k,  scale_scalar_k, add_scalar_scalar_k,
    acc_scalar_k,      macc_scalar_k,     axpy_scalar_k, relu_bwd_scalar_k,
    clamp01_bwd_scalar_k,
};

}  // namespace hazekit::kernels
