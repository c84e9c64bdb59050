#pragma once

#include <cstddef>
#include <string>

namespace hazekit::kernels {

// Numeric contract shared by every backend:
//  * storage is float32; every reduction (conv taps, sums, MSE) accumulates
//    in float64 in one fixed sequential order and rounds to f32 once at the
//    end, so results never depend on backend, batch split or job count;
//  * no fused multiply-add, in source or emitted by the compiler
//    (-ffp-contract=off, AVX2 TU built without -mfma);
//  * SIMD vectorizes across independent output elements, each lane replaying
//    the scalar accumulation order, which keeps all backends bitwise equal.

enum class Backend { Scalar, Avx2, Neon };

const char* backend_name(Backend b);

struct ConvDims {
    int n = 0, in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0, kh = 0, kw = 0;
    int stride = 1, pad = 0;
    int out_h = 0, out_w = 0;
};

struct Table {
    // out[n,oc,oh,ow] = f32( f64(bias[oc]) + sum_{ic,ky,kx} f64(in)*f64(w) ),
    // zero padding, taps accumulated strictly in (ic,ky,kx) order.
    void (*conv2d_fwd)(const float* in, const float* w, const float* bias, float* out, const ConvDims& d);
    // dw[oc,ic,ky,kx] = f32( sum over flat (n,oh,ow) of f64(gout)*f64(in) )
    void (*conv2d_dw)(const float* in, const float* gout, float* dw, const ConvDims& d);

    // elementwise maps (out may alias inputs)
    void (*add)(const float* a, const float* b, float* out, size_t n);
    void (*sub)(const float* a, const float* b, float* out, size_t n);
    void (*mul)(const float* a, const float* b, float* out, size_t n);
    void (*div)(const float* a, const float* b, float* out, size_t n);
    void (*relu)(const float* a, float* out, size_t n);        // x > 0 ? x : 0
    void (*clamp01)(const float* a, float* out, size_t n);     // x<0 -> 0, x>1 -> 1, else x
    void (*scale)(const float* a, float s, float* out, size_t n);
    void (*add_scalar)(const float* a, float s, float* out, size_t n);

    // accumulating maps used by backward passes; each is two rounded f32 ops
    void (*acc)(float* dst, const float* a, size_t n);                   // dst += a
    void (*macc)(float* dst, const float* a, const float* b, size_t n);  // dst += a*b
    void (*axpy)(float* dst, float s, const float* a, size_t n);         // dst += s*a
    void (*relu_bwd)(float* dst, const float* gout, const float* x, size_t n);     // dst += x>0 ? gout : 0
    void (*clamp01_bwd)(float* dst, const float* gout, const float* x, size_t n);  // dst += 0<x<1 ? gout : 0
};

// Active table. First use picks the best supported backend, unless the
// HAZEKIT_BACKEND environment variable (scalar|avx2|neon) names one.
const Table& active();
Backend active_backend();
void select(Backend b);  // throws Error(Config) if unsupported on this host
bool supported(Backend b);
Backend best_available();

// Reductions are deliberately not in the table: one scalar sequential
// implementation shared by all backends.
double sum_f64(const float* a, size_t n);
// sum of (a[i]-b[i])^2, diffs and squares in f64
double sse_f64(const float* a, const float* b, size_t n);
// per-output-channel reduction of gout over (n,oh,ow): bias gradient
void conv2d_dbias(const float* gout, float* db, const ConvDims& d);

// Gradient w.r.t. the conv input for arbitrary stride; scalar gather form.
// Stride-1 callers use the faster route (forward conv of gout against the
// flipped/transposed weights) built in the graph layer.
void conv2d_dinput_generic(const float* gout, const float* w, float* din, const ConvDims& d);

}  // namespace hazekit::kernels
