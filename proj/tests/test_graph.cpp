#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "hazekit/gradcheck.h"
#include "hazekit/graph.h"
#include "hazekit/metrics.h"
#include "hazekit/rng.h"
#include "helpers.h"

using namespace hazekit;
using namespace hazekit::test;

namespace {

// One randomly composed scalar objective. The recipe (drawn from `rng`
// up-front) is replayable, so the same computation can be re-evaluated at a
// perturbed leaf for finite differencing.
struct ChainRecipe {
    Shape shape;
    Tensor x0;                   // the differentiated leaf
    std::vector<Tensor> others;  // constant leaves consumed by binary ops
    std::vector<int> ops;        // op codes drawn in advance
    int reducer = 0;             // 0 mean, 1 mse vs others.back()

    // returns the scalar node; records the inputs feeding relu/clamp nodes so
    // the caller can reject compositions that sit on a kink
    int build(Graph& g, const Tensor& x, std::vector<int>* gate_inputs) const {
        int cur = g.leaf(x, true);
        size_t other_i = 0;
        for (int op : ops) {
            switch (op) {
                case 0: cur = g.add(cur, g.leaf(others[other_i++])); break;
                case 1: cur = g.sub(cur, g.leaf(others[other_i++])); break;
                case 2: cur = g.mul(cur, g.leaf(others[other_i++])); break;
                case 3: cur = g.div(cur, g.leaf(others[other_i++])); break;
                case 4:
                    if (gate_inputs) gate_inputs->push_back(cur);
                    cur = g.relu(cur);
                    break;
                case 5:
                    if (gate_inputs) gate_inputs->push_back(cur);
                    cur = g.clamp01(cur);
                    break;
                case 6: cur = g.scale(cur, 0.7f); break;
                case 7: cur = g.add_scalar(cur, -0.2f); break;
                default: break;
            }
        }
        return reducer == 0 ? g.mean(cur) : g.mse(cur, g.leaf(others.back()));
    }
};

ChainRecipe random_chain(Rng& rng) {
    ChainRecipe r;
    r.shape = Shape{1, 1 + static_cast<int>(rng.next_below(3)), 2 + static_cast<int>(rng.next_below(5)),
                    2 + static_cast<int>(rng.next_below(5))};
    r.x0 = random_tensor_off_kinks(r.shape, rng);
    const int len = 2 + static_cast<int>(rng.next_below(4));
    for (int i = 0; i < len; ++i) {
        const int op = static_cast<int>(rng.next_below(8));
        r.ops.push_back(op);
        if (op <= 2) {
            r.others.push_back(random_tensor_off_kinks(r.shape, rng));
        } else if (op == 3) {
            // denominators bounded away from zero
            Tensor d(r.shape);
            for (float& v : d.v) v = (rng.next_below(2) ? 1.0f : -1.0f) * rng.uniform_f(0.6f, 1.5f);
            r.others.push_back(std::move(d));
        }
    }
    r.reducer = static_cast<int>(rng.next_below(2));
    if (r.reducer == 1) r.others.push_back(random_tensor(r.shape, rng, -0.5f, 0.5f));
    return r;
}

// true when every value feeding a relu/clamp gate keeps a safe distance from
// the kinks at 0 and 1, so central differences stay on one branch
bool gates_safe(const Graph& g, const std::vector<int>& gate_inputs, double margin) {
    for (int id : gate_inputs)
        for (float v : g.val(id).v)
            if (std::fabs(v) < margin || std::fabs(v - 1.0f) < margin) return false;
    return true;
}

}  // namespace

TEST_CASE("autodiff matches finite differences on random op chains") {
    Rng rng(31337);
    int checked = 0, skipped = 0;
    while (checked < 100 && skipped < 400) {
        const ChainRecipe recipe = random_chain(rng);
        Graph probe;
        std::vector<int> gates;
        const int l = recipe.build(probe, recipe.x0, &gates);
        if (!gates_safe(probe, gates, 5e-3)) {
            ++skipped;
            continue;
        }
        probe.backward(l);
        const Tensor analytic = probe.grad(0);

        const auto f = [&](const Tensor& x) -> double {
            Graph g;
            return static_cast<double>(g.val(recipe.build(g, x, nullptr)).v[0]);
        };
        const GradCheckResult res = finite_diff_check(f, recipe.x0, analytic, 1e-3);
        CAPTURE(res.worst_index);
        CAPTURE(res.analytic);
        CAPTURE(res.numeric);
        CHECK(res.max_rel_err < 1e-3);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("autodiff matches finite differences through convolutions") {
    Rng rng(1123);
    struct Case {
        int ic, oc, h, w, k, stride, pad;
    };
    const Case cases[] = {
        {1, 1, 5, 5, 3, 1, 1}, {2, 3, 6, 7, 3, 1, 0}, {3, 2, 8, 8, 3, 2, 1},
        {1, 2, 7, 6, 5, 1, 2}, {2, 1, 9, 5, 3, 2, 0},
    };
    for (const Case& c : cases) {
        const Tensor x = random_tensor(Shape{1, c.ic, c.h, c.w}, rng, -1, 1);
        const Tensor w = random_tensor(Shape{c.oc, c.ic, c.k, c.k}, rng, -0.5f, 0.5f);
        const Tensor b = random_tensor(Shape{1, c.oc, 1, 1}, rng, -0.2f, 0.2f);

        // objective: mean(conv(x, w) + b), differentiated wrt each operand
        auto build = [&](Graph& g, const Tensor& xv, const Tensor& wv, const Tensor& bv, int which) {
            const int xi = g.leaf(xv, which == 0);
            const int wi = g.leaf(wv, which == 1);
            const int bi = g.leaf(bv, which == 2);
            return g.mean(g.conv2d(xi, wi, bi, c.stride, c.pad));
        };
        for (int which = 0; which < 3; ++which) {
            Graph g;
            const int l = build(g, x, w, b, which);
            g.backward(l);
            const Tensor analytic = g.grad(which);
            const Tensor& target = which == 0 ? x : which == 1 ? w : b;
            const auto f = [&](const Tensor& t) {
                Graph h;
                const int ll = build(h, which == 0 ? t : x, which == 1 ? t : w, which == 2 ? t : b, which);
                return static_cast<double>(h.val(ll).v[0]);
            };
            const GradCheckResult res = finite_diff_check(f, target, analytic, 1e-3);
            CHECK(res.max_rel_err < 1e-3);
        }
    }
}

TEST_CASE("differentiable structural similarity passes finite differences") {
    Rng rng(8181);
    for (int rep = 0; rep < 8; ++rep) {
        const Shape s{1, 1, 13, 13};
        const Tensor x = random_tensor(s, rng, 0.1f, 0.9f);
        const Tensor y = random_tensor(s, rng, 0.1f, 0.9f);
        Graph g;
        const int xi = g.leaf(x, true);
        const int yi = g.leaf(y);
        const int sim = metrics::build_ssim(g, xi, yi);
        g.backward(sim);
        const Tensor analytic = g.grad(xi);
        const auto f = [&](const Tensor& t) {
            Graph h;
            return static_cast<double>(h.val(metrics::build_ssim(h, h.leaf(t), h.leaf(y))).v[0]);
        };
        const GradCheckResult res = finite_diff_check(f, x, analytic, 1e-3);
        CHECK(res.max_rel_err < 1e-3);
    }
}

TEST_CASE("hand-checked gradients of individual ops") {
    SUBCASE("mse gradient is 2(x-y)/N on both arguments") {
        const Tensor x = Tensor::from(Shape{1, 1, 2, 2}, {0.1f, 0.5f, -0.4f, 1.2f});
        const Tensor y = Tensor::from(Shape{1, 1, 2, 2}, {0.0f, 0.25f, 0.25f, 1.0f});
        Graph g;
        const int xi = g.leaf(x, true), yi = g.leaf(y, true);
        g.backward(g.mse(xi, yi));
        for (int i = 0; i < 4; ++i) {
            const float want = 2.0f * (x.v[static_cast<size_t>(i)] - y.v[static_cast<size_t>(i)]) / 4.0f;
            CHECK(g.grad(xi).v[static_cast<size_t>(i)] == doctest::Approx(want).epsilon(1e-6));
            CHECK(g.grad(yi).v[static_cast<size_t>(i)] == doctest::Approx(-want).epsilon(1e-6));
        }
    }
    SUBCASE("sum and mean fan out constants") {
        const Tensor x(Shape{1, 2, 2, 2}, 3.0f);
        Graph g;
        const int xi = g.leaf(x, true);
        g.backward(g.sum(xi));
        for (float v : g.grad(xi).v) CHECK(v == 1.0f);
        Graph h;
        const int xj = h.leaf(x, true);
        h.backward(h.mean(xj));
        for (float v : h.grad(xj).v) CHECK(v == 0.125f);
    }
    SUBCASE("product and quotient rules") {
        const Tensor x = Tensor::from(Shape{1, 1, 1, 3}, {0.5f, -1.0f, 2.0f});
        const Tensor y = Tensor::from(Shape{1, 1, 1, 3}, {2.0f, 4.0f, -0.5f});
        Graph g;
        const int xi = g.leaf(x, true), yi = g.leaf(y, true);
        g.backward(g.sum(g.mul(xi, yi)));
        for (int i = 0; i < 3; ++i) {
            CHECK(g.grad(xi).v[static_cast<size_t>(i)] == y.v[static_cast<size_t>(i)]);
            CHECK(g.grad(yi).v[static_cast<size_t>(i)] == x.v[static_cast<size_t>(i)]);
        }
        Graph h;
        const int xj = h.leaf(x, true), yj = h.leaf(y, true);
        h.backward(h.sum(h.div(xj, yj)));
        for (int i = 0; i < 3; ++i) {
            const float yv = y.v[static_cast<size_t>(i)], xv = x.v[static_cast<size_t>(i)];
            CHECK(h.grad(xj).v[static_cast<size_t>(i)] == doctest::Approx(1.0f / yv).epsilon(1e-6));
            CHECK(h.grad(yj).v[static_cast<size_t>(i)] ==
                  doctest::Approx(-xv / (yv * yv)).epsilon(1e-6));
        }
    }
    SUBCASE("gates block gradients outside their active region") {
        const Tensor x = Tensor::from(Shape{1, 1, 1, 4}, {-0.5f, 0.5f, 1.5f, 0.0f});
        Graph g;
        const int xi = g.leaf(x, true);
        g.backward(g.sum(g.relu(xi)));
        CHECK(g.grad(xi).v == std::vector<float>{0, 1, 1, 0});
        Graph h;
        const int xj = h.leaf(x, true);
        h.backward(h.sum(h.clamp01(xj)));
        CHECK(h.grad(xj).v == std::vector<float>{0, 1, 0, 0});
    }
    SUBCASE("concat splits the upstream gradient by channel") {
        const Tensor a(Shape{1, 1, 2, 2}, 1.0f);
        const Tensor b(Shape{1, 2, 2, 2}, 2.0f);
        Graph g;
        const int ai = g.leaf(a, true), bi = g.leaf(b, true);
        const int cat = g.concat_channels({ai, bi});
        CHECK(g.val(cat).shape == Shape{1, 3, 2, 2});
        g.backward(g.mean(cat));
        for (float v : g.grad(ai).v) CHECK(v == doctest::Approx(1.0f / 12.0f));
        for (float v : g.grad(bi).v) CHECK(v == doctest::Approx(1.0f / 12.0f));
    }
    SUBCASE("affine scalar ops") {
        const Tensor x = Tensor::from(Shape{1, 1, 1, 2}, {1.0f, -2.0f});
        Graph g;
        const int xi = g.leaf(x, true);
        g.backward(g.sum(g.add_scalar(g.scale(xi, -3.0f), 5.0f)));
        for (float v : g.grad(xi).v) CHECK(v == -3.0f);
    }
}

TEST_CASE("stride-1 input gradient equals the generic gather form") {
    Rng rng(2718);
    const Tensor x = random_tensor(Shape{2, 3, 9, 8}, rng, -1, 1);
    const Tensor w = random_tensor(Shape{4, 3, 3, 3}, rng, -1, 1);
    const Tensor b(Shape{1, 4, 1, 1}, 0.1f);

    Graph g;
    const int xi = g.leaf(x, true);
    const int conv = g.conv2d(xi, g.leaf(w), g.leaf(b), 1, 1);
    g.backward(g.sum(conv));

    kernels::ConvDims d;
    d.n = 2;
    d.in_c = 3;
    d.in_h = 9;
    d.in_w = 8;
    d.out_c = 4;
    d.kh = d.kw = 3;
    d.stride = 1;
    d.pad = 1;
    d.out_h = 9;
    d.out_w = 8;
    Tensor gout(Shape{2, 4, 9, 8}, 1.0f);
    Tensor din(x.shape);
    kernels::conv2d_dinput_generic(gout.data(), w.data(), din.data(), d);
    CHECK(max_abs_diff(g.grad(xi), din) < 1e-5f);
}

TEST_CASE("backward is linear in the upstream objective") {
    Rng rng(99);
    const Tensor x = random_tensor(Shape{1, 2, 4, 4}, rng, -1, 1);
    const Tensor y = random_tensor(Shape{1, 2, 4, 4}, rng, -1, 1);

    // combined loss a*mse + b*mean on one tape
    Graph g;
    const int xi = g.leaf(x, true);
    const int l = g.add(g.scale(g.mse(xi, g.leaf(y)), 2.0f), g.scale(g.mean(xi), 0.5f));
    g.backward(l);
    const Tensor combined = g.grad(xi);

    Graph g1;
    const int x1 = g1.leaf(x, true);
    g1.backward(g1.mse(x1, g1.leaf(y)));
    Graph g2;
    const int x2 = g2.leaf(x, true);
    g2.backward(g2.mean(x2));

    float worst = 0.0f;
    for (size_t i = 0; i < combined.v.size(); ++i) {
        const float want = 2.0f * g1.grad(x1).v[i] + 0.5f * g2.grad(x2).v[i];
        worst = std::max(worst, std::fabs(want - combined.v[i]));
    }
    CHECK(worst < 1e-6f);
}

TEST_CASE("replaying a tape reproduces gradients bitwise") {
    Rng rng(4242);
    const ChainRecipe recipe = random_chain(rng);
    auto run = [&]() {
        Graph g;
        const int l = recipe.build(g, recipe.x0, nullptr);
        g.backward(l);
        return g.grad(0);
    };
    const Tensor a = run();
    const Tensor b = run();
    CHECK(bitwise_equal(a, b));

    if (kernels::supported(kernels::Backend::Avx2)) {
        Tensor c;
        with_backend(kernels::Backend::Scalar, [&] { c = run(); });
        CHECK(bitwise_equal(a, c));
    }
}

TEST_CASE("graph contract violations throw") {
    const Tensor x(Shape{1, 1, 2, 2}, 0.5f);
    SUBCASE("backward needs a scalar") {
        Graph g;
        const int xi = g.leaf(x, true);
        CHECK_THROWS_AS(g.backward(xi), Error);
    }
    SUBCASE("backward needs a gradient-enabled ancestor") {
        Graph g;
        const int xi = g.leaf(x, false);
        const int l = g.mean(xi);
        CHECK_THROWS_AS(g.backward(l), Error);
    }
    SUBCASE("elementwise shape mismatch") {
        Graph g;
        const int a = g.leaf(x);
        const int b = g.leaf(Tensor(Shape{1, 1, 2, 3}, 0.0f));
        CHECK_THROWS_AS(g.add(a, b), Error);
    }
    SUBCASE("gradient access before backward") {
        Graph g;
        const int xi = g.leaf(x, true);
        CHECK_FALSE(g.has_grad(xi));
        CHECK_THROWS_AS(g.grad(xi), Error);
    }
    SUBCASE("reshape must conserve elements") {
        Graph g;
        const int xi = g.leaf(x);
        CHECK_THROWS_AS(g.reshape(xi, Shape{1, 1, 3, 3}), Error);
    }
    SUBCASE("concat rejects mismatched spatial dims") {
        Graph g;
        const int a = g.leaf(x);
        const int b = g.leaf(Tensor(Shape{1, 1, 3, 2}, 0.0f));
        CHECK_THROWS_AS(g.concat_channels({a, b}), Error);
    }
}

TEST_CASE("backward invocations are counted process-wide") {
    const uint64_t before = Graph::backward_count();
    Graph g;
    const int xi = g.leaf(Tensor(Shape{1, 1, 2, 2}, 0.5f), true);
    g.backward(g.mean(xi));
    CHECK(Graph::backward_count() == before + 1);
}
