#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

#include "hazekit/kernels.h"
#include "hazekit/rng.h"
#include "hazekit/tensor.h"
#include "helpers.h"

using namespace hazekit;
using namespace hazekit::test;
using kernels::Backend;
using kernels::ConvDims;

namespace {

ConvDims make_dims(int n, int ic, int ih, int iw, int oc, int k, int stride, int pad) {
    ConvDims d;
    d.n = n;
    d.in_c = ic;
    d.in_h = ih;
    d.in_w = iw;
    d.out_c = oc;
    d.kh = k;
    d.kw = k;
    d.stride = stride;
    d.pad = pad;
    d.out_h = (ih + 2 * pad - k) / stride + 1;
    d.out_w = (iw + 2 * pad - k) / stride + 1;
    return d;
}

// Nested-loop reference convolution. Accumulates in double like the library,
// but walks the taps in a different order (ky,kx,ic) so agreement is not an
// artifact of shared code.
std::vector<float> conv_ref(const std::vector<float>& in, const std::vector<float>& w,
                            const std::vector<float>& bias, const ConvDims& d) {
    std::vector<float> out(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w);
    auto in_at = [&](int n, int c, int y, int x) -> double {
        if (y < 0 || y >= d.in_h || x < 0 || x >= d.in_w) return 0.0;
        return in[((static_cast<size_t>(n) * d.in_c + c) * d.in_h + y) * d.in_w + x];
    };
    size_t o = 0;
    for (int n = 0; n < d.n; ++n)
        for (int oc = 0; oc < d.out_c; ++oc)
            for (int oh = 0; oh < d.out_h; ++oh)
                for (int ow = 0; ow < d.out_w; ++ow, ++o) {
                    double acc = bias[static_cast<size_t>(oc)];
                    for (int ky = 0; ky < d.kh; ++ky)
                        for (int kx = 0; kx < d.kw; ++kx)
                            for (int ic = 0; ic < d.in_c; ++ic) {
                                const double wv =
                                    w[((static_cast<size_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx];
                                acc += in_at(n, ic, oh * d.stride + ky - d.pad,
                                             ow * d.stride + kx - d.pad) *
                                       wv;
                            }
                    out[o] = static_cast<float>(acc);
                }
    return out;
}

std::vector<float> conv_dw_ref(const std::vector<float>& in, const std::vector<float>& gout,
                               const ConvDims& d) {
    std::vector<float> dw(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw);
    auto in_at = [&](int n, int c, int y, int x) -> double {
        if (y < 0 || y >= d.in_h || x < 0 || x >= d.in_w) return 0.0;
        return in[((static_cast<size_t>(n) * d.in_c + c) * d.in_h + y) * d.in_w + x];
    };
    size_t o = 0;
    for (int oc = 0; oc < d.out_c; ++oc)
        for (int ic = 0; ic < d.in_c; ++ic)
            for (int ky = 0; ky < d.kh; ++ky)
                for (int kx = 0; kx < d.kw; ++kx, ++o) {
                    double acc = 0.0;
                    for (int n = 0; n < d.n; ++n)
                        for (int oh = 0; oh < d.out_h; ++oh)
                            for (int ow = 0; ow < d.out_w; ++ow) {
                                const double g =
                                    gout[((static_cast<size_t>(n) * d.out_c + oc) * d.out_h + oh) *
                                             d.out_w +
                                         ow];
                                acc += g * in_at(n, ic, oh * d.stride + ky - d.pad,
                                                 ow * d.stride + kx - d.pad);
                            }
                    dw[o] = static_cast<float>(acc);
                }
    return dw;
}

std::vector<float> conv_dinput_ref(const std::vector<float>& gout, const std::vector<float>& w,
                                   const ConvDims& d) {
    std::vector<double> acc(static_cast<size_t>(d.n) * d.in_c * d.in_h * d.in_w, 0.0);
    for (int n = 0; n < d.n; ++n)
        for (int oc = 0; oc < d.out_c; ++oc)
            for (int oh = 0; oh < d.out_h; ++oh)
                for (int ow = 0; ow < d.out_w; ++ow) {
                    const double g =
                        gout[((static_cast<size_t>(n) * d.out_c + oc) * d.out_h + oh) * d.out_w + ow];
                    for (int ic = 0; ic < d.in_c; ++ic)
                        for (int ky = 0; ky < d.kh; ++ky)
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int iy = oh * d.stride + ky - d.pad;
                                const int ix = ow * d.stride + kx - d.pad;
                                if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                                const double wv =
                                    w[((static_cast<size_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx];
                                acc[((static_cast<size_t>(n) * d.in_c + ic) * d.in_h + iy) * d.in_w +
                                    ix] += g * wv;
                            }
                }
    std::vector<float> din(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) din[i] = static_cast<float>(acc[i]);
    return din;
}

double rel_err(float a, float b) {
    const double d = std::fabs(static_cast<double>(a) - b);
    return d / std::max({1.0, std::fabs(static_cast<double>(a)), std::fabs(static_cast<double>(b))});
}

std::vector<float> random_vec(size_t n, Rng& rng, float lo, float hi) {
    std::vector<float> v(n);
    for (float& x : v) x = rng.uniform_f(lo, hi);
    return v;
}

// sizes exercising simd main loops and ragged scalar tails
const std::vector<size_t> kLens = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 32, 33, 63, 64, 67, 257};

}  // namespace

TEST_CASE("convolution matches nested-loop brute force on random shapes") {
    Rng rng(20240521);
    int done = 0;
    while (done < 50) {
        const int k = std::vector<int>{1, 3, 5}[rng.next_below(3)];
        const int stride = 1 + static_cast<int>(rng.next_below(2));
        const int pad = static_cast<int>(rng.next_below(3));
        const int ih = k + static_cast<int>(rng.next_below(12));
        const int iw = k + static_cast<int>(rng.next_below(12));
        if (ih + 2 * pad < k || iw + 2 * pad < k) continue;
        const ConvDims d = make_dims(1 + static_cast<int>(rng.next_below(3)),
                                     1 + static_cast<int>(rng.next_below(5)), ih, iw,
                                     1 + static_cast<int>(rng.next_below(6)), k, stride, pad);
        if (d.out_h < 1 || d.out_w < 1) continue;
        ++done;

        const auto in = random_vec(static_cast<size_t>(d.n) * d.in_c * d.in_h * d.in_w, rng, -1, 1);
        const auto w = random_vec(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw, rng, -1, 1);
        const auto b = random_vec(static_cast<size_t>(d.out_c), rng, -1, 1);
        std::vector<float> out(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w);
        kernels::active().conv2d_fwd(in.data(), w.data(), b.data(), out.data(), d);
        const auto ref = conv_ref(in, w, b, d);
        double worst = 0.0;
        for (size_t i = 0; i < out.size(); ++i) worst = std::max(worst, rel_err(out[i], ref[i]));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("weight gradient matches brute force") {
    Rng rng(77001);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = std::vector<int>{1, 3}[rng.next_below(2)];
        const ConvDims d = make_dims(1 + static_cast<int>(rng.next_below(2)),
                                     1 + static_cast<int>(rng.next_below(4)),
                                     k + static_cast<int>(rng.next_below(8)),
                                     k + static_cast<int>(rng.next_below(8)),
                                     1 + static_cast<int>(rng.next_below(4)), k,
                                     1 + static_cast<int>(rng.next_below(2)),
                                     static_cast<int>(rng.next_below(2)));
        if (d.out_h < 1 || d.out_w < 1) {
            --rep;
            continue;
        }
        const auto in = random_vec(static_cast<size_t>(d.n) * d.in_c * d.in_h * d.in_w, rng, -1, 1);
        const auto gout =
            random_vec(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w, rng, -1, 1);
        std::vector<float> dw(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw);
        kernels::active().conv2d_dw(in.data(), gout.data(), dw.data(), d);
        const auto ref = conv_dw_ref(in, gout, d);
        double worst = 0.0;
        for (size_t i = 0; i < dw.size(); ++i) worst = std::max(worst, rel_err(dw[i], ref[i]));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("bias gradient reduces gout per output channel") {
    Rng rng(77002);
    const ConvDims d = make_dims(2, 3, 6, 5, 4, 3, 1, 1);
    const auto gout = random_vec(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w, rng, -1, 1);
    std::vector<float> db(static_cast<size_t>(d.out_c));
    kernels::conv2d_dbias(gout.data(), db.data(), d);
    for (int oc = 0; oc < d.out_c; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < d.n; ++n)
            for (int i = 0; i < d.out_h * d.out_w; ++i)
                acc += gout[(static_cast<size_t>(n) * d.out_c + oc) * d.out_h * d.out_w +
                            static_cast<size_t>(i)];
        CHECK(rel_err(db[static_cast<size_t>(oc)], static_cast<float>(acc)) < 1e-6);
    }
}

TEST_CASE("input gradient (generic stride form) matches brute-force scatter") {
    Rng rng(77003);
    for (int rep = 0; rep < 12; ++rep) {
        const int k = std::vector<int>{1, 3, 5}[rng.next_below(3)];
        const int stride = 1 + static_cast<int>(rng.next_below(2));
        const ConvDims d =
            make_dims(1 + static_cast<int>(rng.next_below(2)), 1 + static_cast<int>(rng.next_below(3)),
                      k + static_cast<int>(rng.next_below(7)), k + static_cast<int>(rng.next_below(7)),
                      1 + static_cast<int>(rng.next_below(3)), k, stride,
                      static_cast<int>(rng.next_below(2)));
        if (d.out_h < 1 || d.out_w < 1) {
            --rep;
            continue;
        }
        const auto gout =
            random_vec(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w, rng, -1, 1);
        const auto w = random_vec(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw, rng, -1, 1);
        std::vector<float> din(static_cast<size_t>(d.n) * d.in_c * d.in_h * d.in_w);
        kernels::conv2d_dinput_generic(gout.data(), w.data(), din.data(), d);
        const auto ref = conv_dinput_ref(gout, w, d);
        double worst = 0.0;
        for (size_t i = 0; i < din.size(); ++i) worst = std::max(worst, rel_err(din[i], ref[i]));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("scalar and simd backends agree bitwise") {
    if (!kernels::supported(Backend::Avx2) && !kernels::supported(Backend::Neon)) {
        MESSAGE("no simd backend on this host; skipping");
        return;
    }
    const Backend simd = kernels::supported(Backend::Avx2) ? Backend::Avx2 : Backend::Neon;
    Rng rng(90210);

    SUBCASE("elementwise ops across ragged lengths") {
        for (size_t len : kLens) {
            auto a = random_vec(len, rng, -2, 2);
            auto b = random_vec(len, rng, -2, 2);
            // splice in the values whose handling is easiest to get wrong
            const float edge[] = {-0.0f, 0.0f, 1.0f, -1.0f, 0.5f, 1.5f, -1e-38f, 1e-38f};
            for (size_t i = 0; i < len && i < 8; ++i) a[i] = edge[i];
            for (float& x : b)
                if (x > -0.05f && x < 0.05f) x = 0.25f;  // keep div well-conditioned

            auto run_all = [&](std::vector<std::vector<float>>& outs) {
                const auto& t = kernels::active();
                std::vector<float> o(len), acc1(len, 0.5f), acc2(len, 0.5f), acc3(len, 0.5f),
                    acc4(len, 0.5f), acc5(len, 0.5f);
                t.add(a.data(), b.data(), o.data(), len);
                outs.push_back(o);
                t.sub(a.data(), b.data(), o.data(), len);
                outs.push_back(o);
                t.mul(a.data(), b.data(), o.data(), len);
                outs.push_back(o);
                t.div(a.data(), b.data(), o.data(), len);
                outs.push_back(o);
                t.relu(a.data(), o.data(), len);
                outs.push_back(o);
                t.clamp01(a.data(), o.data(), len);
                outs.push_back(o);
                t.scale(a.data(), -1.7f, o.data(), len);
                outs.push_back(o);
                t.add_scalar(a.data(), 0.3f, o.data(), len);
                outs.push_back(o);
                t.acc(acc1.data(), a.data(), len);
                outs.push_back(acc1);
                t.macc(acc2.data(), a.data(), b.data(), len);
                outs.push_back(acc2);
                t.axpy(acc3.data(), 0.77f, a.data(), len);
                outs.push_back(acc3);
                t.relu_bwd(acc4.data(), b.data(), a.data(), len);
                outs.push_back(acc4);
                t.clamp01_bwd(acc5.data(), b.data(), a.data(), len);
                outs.push_back(acc5);
            };

            std::vector<std::vector<float>> scalar_out, simd_out;
            with_backend(Backend::Scalar, [&] { run_all(scalar_out); });
            with_backend(simd, [&] { run_all(simd_out); });
            REQUIRE(scalar_out.size() == simd_out.size());
            for (size_t i = 0; i < scalar_out.size(); ++i) {
                REQUIRE(scalar_out[i].size() == simd_out[i].size());
                CHECK(std::memcmp(scalar_out[i].data(), simd_out[i].data(),
                                  scalar_out[i].size() * sizeof(float)) == 0);
            }
        }
    }

    SUBCASE("convolutions across a dims sweep") {
        for (int rep = 0; rep < 25; ++rep) {
            const int k = std::vector<int>{1, 3, 5}[rng.next_below(3)];
            const ConvDims d = make_dims(
                1 + static_cast<int>(rng.next_below(2)), 1 + static_cast<int>(rng.next_below(6)),
                k + static_cast<int>(rng.next_below(13)), k + static_cast<int>(rng.next_below(13)),
                1 + static_cast<int>(rng.next_below(6)), k, 1 + static_cast<int>(rng.next_below(2)),
                static_cast<int>(rng.next_below(3)));
            if (d.out_h < 1 || d.out_w < 1) {
                --rep;
                continue;
            }
            const auto in = random_vec(static_cast<size_t>(d.n) * d.in_c * d.in_h * d.in_w, rng, -1, 1);
            const auto w = random_vec(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw, rng, -1, 1);
            const auto b = random_vec(static_cast<size_t>(d.out_c), rng, -1, 1);
            const auto gout =
                random_vec(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w, rng, -1, 1);

            std::vector<float> fwd_s(static_cast<size_t>(d.n) * d.out_c * d.out_h * d.out_w), fwd_v;
            std::vector<float> dw_s(static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw), dw_v;
            fwd_v = fwd_s;
            dw_v = dw_s;
            with_backend(Backend::Scalar, [&] {
                kernels::active().conv2d_fwd(in.data(), w.data(), b.data(), fwd_s.data(), d);
                kernels::active().conv2d_dw(in.data(), gout.data(), dw_s.data(), d);
            });
            with_backend(simd, [&] {
                kernels::active().conv2d_fwd(in.data(), w.data(), b.data(), fwd_v.data(), d);
                kernels::active().conv2d_dw(in.data(), gout.data(), dw_v.data(), d);
            });
            CHECK(std::memcmp(fwd_s.data(), fwd_v.data(), fwd_s.size() * sizeof(float)) == 0);
            CHECK(std::memcmp(dw_s.data(), dw_v.data(), dw_s.size() * sizeof(float)) == 0);
        }
    }
}

TEST_CASE("signed zero and boundary semantics are pinned") {
    const float in[] = {-0.0f, 0.0f, -1.0f, 1.0f, 0.5f, 2.0f, -0.25f, 1e-30f};
    const size_t n = 8;
    float out[8];

    kernels::active().relu(in, out, n);
    CHECK(std::bit_cast<uint32_t>(out[0]) == 0u);  // relu(-0) is +0
    CHECK(out[1] == 0.0f);
    CHECK(out[2] == 0.0f);
    CHECK(out[3] == 1.0f);
    CHECK(out[5] == 2.0f);
    CHECK(out[7] == 1e-30f);

    kernels::active().clamp01(in, out, n);
    CHECK(std::bit_cast<uint32_t>(out[0]) == 0x80000000u);  // -0 is not < 0: kept
    CHECK(out[2] == 0.0f);
    CHECK(out[3] == 1.0f);
    CHECK(out[5] == 1.0f);
    CHECK(out[6] == 0.0f);

    // gradient gates: relu passes at x > 0, clamp only strictly inside (0,1)
    float d1[8] = {}, d2[8] = {};
    const float g[] = {1, 1, 1, 1, 1, 1, 1, 1};
    kernels::active().relu_bwd(d1, g, in, n);
    CHECK(d1[0] == 0.0f);
    CHECK(d1[3] == 1.0f);
    CHECK(d1[4] == 1.0f);
    CHECK(d1[6] == 0.0f);
    kernels::active().clamp01_bwd(d2, g, in, n);
    CHECK(d2[0] == 0.0f);
    CHECK(d2[3] == 0.0f);  // x == 1 sits on the boundary: gate closed
    CHECK(d2[4] == 1.0f);
    CHECK(d2[5] == 0.0f);
}

TEST_CASE("shared reductions accumulate sequentially in double") {
    Rng rng(5150);
    const auto a = random_vec(1003, rng, -1, 1);
    const auto b = random_vec(1003, rng, -1, 1);
    double s = 0.0, e = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]);
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        e += d * d;
    }
    CHECK(kernels::sum_f64(a.data(), a.size()) == s);
    CHECK(kernels::sse_f64(a.data(), b.data(), a.size()) == e);
}

TEST_CASE("backend selection reports and rejects correctly") {
    CHECK(kernels::supported(Backend::Scalar));
    CHECK(std::string(kernels::backend_name(Backend::Scalar)) == "scalar");
    const Backend best = kernels::best_available();
    CHECK(kernels::supported(best));
    if (!kernels::supported(Backend::Neon))
        CHECK_THROWS_AS(kernels::select(Backend::Neon), Error);
    if (!kernels::supported(Backend::Avx2))
        CHECK_THROWS_AS(kernels::select(Backend::Avx2), Error);
    kernels::select(best);
    CHECK(kernels::active_backend() == best);
}
