#include "hazekit/kernels.h"

#include <cstdlib>
#include <string>

#include "hazekit/error.h"
#include "kernels_internal.h"

namespace hazekit::kernels {

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

bool supported(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#ifdef HAZEKIT_BUILD_AVX2
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::Neon:
#ifdef HAZEKIT_BUILD_NEON
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend best_available() {
    if (supported(Backend::Avx2)) return Backend::Avx2;
    if (supported(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

namespace {

const Table* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &kScalarTable;
        case Backend::Avx2:
#ifdef HAZEKIT_BUILD_AVX2
            return &kAvx2Table;
#else
            break;
#endif
        case Backend::Neon:
#ifdef HAZEKIT_BUILD_NEON
            return &kNeonTable;
#else
            break;
#endif
    }
    return nullptr;
}

Backend initial_backend() {
    if (const char* env = std::getenv("HAZEKIT_BACKEND")) {
        const std::string s(env);
        Backend want;
        if (s == "scalar")
            want = Backend::Scalar;
        else if (s == "avx2")
            want = Backend::Avx2;
        else if (s == "neon")
            want = Backend::Neon;
        else
            throw_config("HAZEKIT_BACKEND must be scalar|avx2|neon, got '" + s + "'");
        if (!supported(want)) throw_config(std::string("backend not supported on this host: ") + s);
        return want;
    }
    return best_available();
}

// lazy so a bad HAZEKIT_BACKEND value surfaces as a catchable error
Backend& backend_ref() {
    static Backend b = initial_backend();
    return b;
}

}  // namespace

const Table& active() { return *table_for(backend_ref()); }
Backend active_backend() { return backend_ref(); }

void select(Backend b) {
    if (!supported(b)) throw_config(std::string("backend not supported on this host: ") + backend_name(b));
    backend_ref() = b;
}

double sum_f64(const float* a, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]);
    return acc;
}

double sse_f64(const float* a, const float* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

void conv2d_dbias(const float* gout, float* db, const ConvDims& d) {
    const size_t plane = static_cast<size_t>(d.out_h) * d.out_w;
    for (int oc = 0; oc < d.out_c; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < d.n; ++n) {
            const float* g = gout + (static_cast<size_t>(n) * d.out_c + oc) * plane;
            for (size_t i = 0; i < plane; ++i) acc += static_cast<double>(g[i]);
        }
        db[oc] = static_cast<float>(acc);
    }
}

void conv2d_dinput_generic(const float* gout, const float* w, float* din, const ConvDims& d) {
    const size_t gplane = static_cast<size_t>(d.out_h) * d.out_w;
    for (int n = 0; n < d.n; ++n)
        for (int ic = 0; ic < d.in_c; ++ic)
            for (int ih = 0; ih < d.in_h; ++ih)
                for (int iw = 0; iw < d.in_w; ++iw) {
                    double acc = 0.0;
                    for (int oc = 0; oc < d.out_c; ++oc) {
                        const float* g = gout + (static_cast<size_t>(n) * d.out_c + oc) * gplane;
                        const float* wc = w + (static_cast<size_t>(oc) * d.in_c + ic) *
                                                  (static_cast<size_t>(d.kh) * d.kw);
                        for (int ky = 0; ky < d.kh; ++ky) {
                            const int ohs = ih + d.pad - ky;
                            if (ohs < 0 || ohs % d.stride != 0) continue;
                            const int oh = ohs / d.stride;
                            if (oh >= d.out_h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int ows = iw + d.pad - kx;
                                if (ows < 0 || ows % d.stride != 0) continue;
                                const int ow = ows / d.stride;
                                if (ow >= d.out_w) continue;
                                acc += static_cast<double>(g[static_cast<size_t>(oh) * d.out_w + ow]) *
                                       static_cast<double>(wc[static_cast<size_t>(ky) * d.kw + kx]);
                            }
                        }
                    }
                    din[((static_cast<size_t>(n) * d.in_c + ic) * d.in_h + ih) * d.in_w + iw] =
                        static_cast<float>(acc);
                }
}

}  // namespace hazekit::kernels
