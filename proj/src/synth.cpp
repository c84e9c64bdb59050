#include "hazekit/synth.h"

#include <cmath>

#include "hazekit/error.h"
#include "hazekit/rng.h"

namespace hazekit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Scene render_clear(const SceneSpec& spec) {
    if (spec.h < 4 || spec.w < 4) throw_config("scene must be at least 4x4");
    if (spec.objects < 0) throw_config("object count must be >= 0");
    Rng rng(spec.seed);
    Scene out;
    out.clear = Tensor(Shape{1, 3, spec.h, spec.w});
    out.depth = Tensor(Shape{1, 1, spec.h, spec.w});

    // base coat: linear two-color gradient; a shared sinusoidal micro-texture
    // is layered over everything at the end, so color ranges leave headroom
    // and no pixel ever needs clipping
    float c0[3], c1[3];
    for (float& v : c0) v = rng.uniform_f(0.28f, 0.72f);
    for (float& v : c1) v = rng.uniform_f(0.28f, 0.72f);
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const double ux = std::cos(theta), uy = std::sin(theta);
    double fx[3], fy[3], phase[3];
    for (int c = 0; c < 3; ++c) {
        fx[c] = rng.uniform(1.5, 4.5);
        fy[c] = rng.uniform(1.5, 4.5);
        phase[c] = rng.uniform(0.0, 2.0 * kPi);
    }
    const float bg_depth = rng.uniform_f(0.30f, 0.55f);
    constexpr double kTexAmp = 0.09;

    for (int y = 0; y < spec.h; ++y)
        for (int x = 0; x < spec.w; ++x) {
            const double nx = 2.0 * x / (spec.w - 1) - 1.0;
            const double ny = 2.0 * y / (spec.h - 1) - 1.0;
            const double u = 0.5 + 0.5 * (ux * nx + uy * ny) / std::sqrt(2.0);
            for (int c = 0; c < 3; ++c)
                out.clear.at(0, c, y, x) = static_cast<float>(c0[c] + (c1[c] - c0[c]) * u);
            out.depth.at(0, 0, y, x) = bg_depth;
        }

    // objects, farthest drawn first so nearer ones paint over
    struct Obj {
        bool disk;
        float color[3];
        float depth;
        double cx, cy, half;
    };
    std::vector<Obj> objs;
    for (int i = 0; i < spec.objects; ++i) {
        Obj o;
        o.depth = 0.05f + 0.30f * (spec.objects > 1 ? static_cast<float>(i) / (spec.objects - 1) : 0.0f);
        o.disk = rng.next_below(2) == 1;
        for (float& v : o.color) v = rng.uniform_f(0.15f, 0.85f);
        o.cx = rng.uniform(0.15, 0.85) * spec.w;
        o.cy = rng.uniform(0.15, 0.85) * spec.h;
        o.half = rng.uniform(0.10, 0.28) * std::min(spec.h, spec.w);
        objs.push_back(o);
    }
    for (int i = static_cast<int>(objs.size()) - 1; i >= 0; --i) {
        const Obj& o = objs[static_cast<size_t>(i)];
        for (int y = 0; y < spec.h; ++y)
            for (int x = 0; x < spec.w; ++x) {
                const double dx = x - o.cx, dy = y - o.cy;
                const bool inside = o.disk ? (dx * dx + dy * dy <= o.half * o.half)
                                           : (std::fabs(dx) <= o.half && std::fabs(dy) <= o.half);
                if (!inside) continue;
                for (int c = 0; c < 3; ++c) out.clear.at(0, c, y, x) = o.color[c];
                out.depth.at(0, 0, y, x) = o.depth;
            }
    }

    // micro-texture over every surface, objects included: haze attenuates
    // local contrast by exactly the transmission, so a fixed-amplitude
    // pattern makes depth recoverable from any patch, not just edges
    for (int y = 0; y < spec.h; ++y)
        for (int x = 0; x < spec.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double tex =
                    kTexAmp * std::sin(2.0 * kPi * (fx[c] * x / spec.w + fy[c] * y / spec.h) + phase[c]);
                out.clear.at(0, c, y, x) += static_cast<float>(tex);
            }
    return out;
}

Tensor transmission(const Tensor& depth, float beta) {
    if (beta < 0.0f) throw_config("beta must be >= 0");
    Tensor t(depth.shape);
    for (size_t i = 0; i < depth.v.size(); ++i) {
        const double bd = static_cast<double>(beta) * static_cast<double>(depth.v[i]);
        t.v[i] = static_cast<float>(std::exp(-bd));
    }
    return t;
}

Tensor apply_haze(const Tensor& clear, const Tensor& depth, const HazeParams& p) {
    const Shape s = clear.shape;
    if (depth.shape.n != s.n || depth.shape.c != 1 || depth.shape.h != s.h || depth.shape.w != s.w)
        throw_shape("depth must be (N,1,H,W) matching the image");
    if (p.beta < 0.0f) throw_config("beta must be >= 0");
    for (float a : p.airlight)
        if (a < 0.6f || a > 1.0f) throw_config("airlight must lie in [0.6, 1.0]");
    for (float d : depth.v)
        if (d < 0.0f || d > 1.0f) throw_config("depth values must lie in [0, 1]");

    const Tensor t = transmission(depth, p.beta);
    Tensor hazy(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const float a = p.airlight[c % 3];
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) {
                    const float tv = t.at(n, 0, y, x);
                    const float j = clear.at(n, c, y, x);
                    // A + t*(J-A) cannot leave [min(A,J), max(A,J)] under
                    // round-to-nearest, so the result needs no clipping;
                    // t == 1 must reproduce J bit for bit.
                    hazy.at(n, c, y, x) = (tv == 1.0f) ? j : a + tv * (j - a);
                }
        }
    return hazy;
}

GenResult gen_dataset(const GenConfig& cfg) {
    if (cfg.count <= 0) throw_config("pair count must be > 0");
    if (cfg.size < 4) throw_config("image size must be >= 4");
    GenResult out;
    const Shape s{cfg.count, 3, cfg.size, cfg.size};
    out.data.hazy = Tensor(s);
    out.data.clear = Tensor(s);
    const size_t img = static_cast<size_t>(s.c) * s.h * s.w;
    for (int i = 0; i < cfg.count; ++i) {
        Rng pair_rng(substream_seed(cfg.seed, "pair", static_cast<uint64_t>(i)));
        PairMeta meta;
        meta.scene_seed = substream_seed(cfg.seed, "scene", static_cast<uint64_t>(i));
        meta.objects = 2 + static_cast<int>(pair_rng.next_below(4));
        meta.beta = pair_rng.uniform_f(0.8f, 2.5f);
        const float base_a = pair_rng.uniform_f(0.7f, 1.0f);
        for (float& a : meta.airlight) {
            float v = base_a + pair_rng.uniform_f(-0.02f, 0.02f);
            a = v < 0.7f ? 0.7f : (v > 1.0f ? 1.0f : v);
        }

        SceneSpec spec;
        spec.h = cfg.size;
        spec.w = cfg.size;
        spec.objects = meta.objects;
        spec.seed = meta.scene_seed;
        const Scene scene = render_clear(spec);

        HazeParams hp;
        hp.beta = meta.beta;
        for (int c = 0; c < 3; ++c) hp.airlight[c] = meta.airlight[c];
        const Tensor hazy = apply_haze(scene.clear, scene.depth, hp);

        std::copy(hazy.v.begin(), hazy.v.end(), out.data.hazy.v.begin() + static_cast<long>(static_cast<size_t>(i) * img));
        std::copy(scene.clear.v.begin(), scene.clear.v.end(),
                  out.data.clear.v.begin() + static_cast<long>(static_cast<size_t>(i) * img));
        out.meta.push_back(meta);
    }
    return out;
}

}  // namespace hazekit
