#include "hazekit/graph.h"

#include <atomic>

namespace hazekit {

namespace {
std::atomic<uint64_t> g_backward_count{0};
}

uint64_t Graph::backward_count() { return g_backward_count.load(); }

const Graph::Node& Graph::node_at(int id) const {
    if (id < 0 || id >= size()) throw_contract("node id out of range");
    return nodes_[static_cast<size_t>(id)];
}
Graph::Node& Graph::node_at(int id) {
    if (id < 0 || id >= size()) throw_contract("node id out of range");
    return nodes_[static_cast<size_t>(id)];
}
int Graph::check(int id) const {
    node_at(id);
    return id;
}

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return size() - 1;
}

const Tensor& Graph::grad(int id) const {
    const Node& n = node_at(id);
    if (n.grad.empty()) throw_contract("gradient not computed for node " + std::to_string(id));
    return n.grad;
}

int Graph::leaf(Tensor t, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(t);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

kernels::ConvDims Graph::conv_dims(const Node& n) const {
    const Shape& xs = nodes_[n.in[0]].val.shape;
    const Shape& ws = nodes_[n.in[1]].val.shape;
    kernels::ConvDims d;
    d.n = xs.n;
    d.in_c = xs.c;
    d.in_h = xs.h;
    d.in_w = xs.w;
    d.out_c = ws.n;
    d.kh = ws.h;
    d.kw = ws.w;
    d.stride = n.stride;
    d.pad = n.pad;
    d.out_h = (xs.h + 2 * n.pad - ws.h) / n.stride + 1;
    d.out_w = (xs.w + 2 * n.pad - ws.w) / n.stride + 1;
    return d;
}

int Graph::conv2d(int x, int w, int b, int stride, int pad) {
    const Shape xs = val(check(x)).shape;
    const Shape ws = val(check(w)).shape;
    const Shape bs = val(check(b)).shape;
    if (stride < 1) throw_config("conv stride must be >= 1");
    if (pad < 0) throw_config("conv pad must be >= 0");
    if (ws.c != xs.c)
        throw_shape("conv input channels " + std::to_string(xs.c) + " != weight channels " +
                    std::to_string(ws.c));
    if (bs.numel() != ws.n) throw_shape("conv bias must hold one value per output channel");
    if (xs.h + 2 * pad < ws.h || xs.w + 2 * pad < ws.w)
        throw_shape("conv kernel " + ws.str() + " larger than padded input " + xs.str());

    Node n;
    n.op = Op::Conv2d;
    n.in = {x, w, b};
    n.stride = stride;
    n.pad = pad;
    n.requires_grad = requires_grad(x) || requires_grad(w) || requires_grad(b);
    const kernels::ConvDims d = conv_dims(n);
    n.val = Tensor(Shape{d.n, d.out_c, d.out_h, d.out_w});
    kernels::active().conv2d_fwd(val(x).data(), val(w).data(), val(b).data(), n.val.data(), d);
    return push(std::move(n));
}

int Graph::binary_op(Op op, int x, int y) {
    const Tensor& xv = val(check(x));
    const Tensor& yv = val(check(y));
    if (!(xv.shape == yv.shape))
        throw_shape("elementwise shape mismatch " + xv.shape.str() + " vs " + yv.shape.str());
    Node n;
    n.op = op;
    n.in = {x, y};
    n.requires_grad = requires_grad(x) || requires_grad(y);
    n.val = Tensor(xv.shape);
    const auto& k = kernels::active();
    const size_t count = xv.v.size();
    switch (op) {
        case Op::Add: k.add(xv.data(), yv.data(), n.val.data(), count); break;
        case Op::Sub: k.sub(xv.data(), yv.data(), n.val.data(), count); break;
        case Op::Mul: k.mul(xv.data(), yv.data(), n.val.data(), count); break;
        case Op::Div: k.div(xv.data(), yv.data(), n.val.data(), count); break;
        default: throw_contract("not a binary op");
    }
    return push(std::move(n));
}

int Graph::add(int x, int y) { return binary_op(Op::Add, x, y); }
int Graph::sub(int x, int y) { return binary_op(Op::Sub, x, y); }
int Graph::mul(int x, int y) { return binary_op(Op::Mul, x, y); }
int Graph::div(int x, int y) { return binary_op(Op::Div, x, y); }

int Graph::unary_op(Op op, int x, float a) {
    const Tensor& xv = val(check(x));
    Node n;
    n.op = op;
    n.in = {x};
    n.a = a;
    n.requires_grad = requires_grad(x);
    n.val = Tensor(xv.shape);
    const auto& k = kernels::active();
    const size_t count = xv.v.size();
    switch (op) {
        case Op::Relu: k.relu(xv.data(), n.val.data(), count); break;
        case Op::Clamp01: k.clamp01(xv.data(), n.val.data(), count); break;
        case Op::Scale: k.scale(xv.data(), a, n.val.data(), count); break;
        case Op::AddScalar: k.add_scalar(xv.data(), a, n.val.data(), count); break;
        default: throw_contract("not a unary op");
    }
    return push(std::move(n));
}

int Graph::relu(int x) { return unary_op(Op::Relu, x); }
int Graph::clamp01(int x) { return unary_op(Op::Clamp01, x); }
int Graph::scale(int x, float s) { return unary_op(Op::Scale, x, s); }
int Graph::add_scalar(int x, float s) { return unary_op(Op::AddScalar, x, s); }

int Graph::concat_channels(const std::vector<int>& xs) {
    if (xs.empty()) throw_config("concat needs at least one input");
    const Shape first = val(check(xs[0])).shape;
    int total_c = 0;
    bool rg = false;
    for (int id : xs) {
        const Shape s = val(check(id)).shape;
        if (s.n != first.n || s.h != first.h || s.w != first.w)
            throw_shape("concat inputs must share batch and spatial dims");
        total_c += s.c;
        rg = rg || requires_grad(id);
    }
    Node n;
    n.op = Op::ConcatC;
    n.in = xs;
    n.requires_grad = rg;
    n.val = Tensor(Shape{first.n, total_c, first.h, first.w});
    const size_t plane = static_cast<size_t>(first.h) * first.w;
    for (int img = 0; img < first.n; ++img) {
        float* dst = n.val.data() + static_cast<size_t>(img) * total_c * plane;
        for (int id : xs) {
            const Tensor& src = val(id);
            const size_t block = static_cast<size_t>(src.shape.c) * plane;
            const float* sp = src.data() + static_cast<size_t>(img) * block;
            for (size_t i = 0; i < block; ++i) dst[i] = sp[i];
            dst += block;
        }
    }
    return push(std::move(n));
}

int Graph::reshape(int x, Shape s) {
    const Tensor& xv = val(check(x));
    if (s.numel() != xv.numel())
        throw_shape("reshape " + xv.shape.str() + " -> " + s.str() + " changes element count");
    Node n;
    n.op = Op::Reshape;
    n.in = {x};
    n.requires_grad = requires_grad(x);
    n.val = Tensor::from(s, xv.v);
    return push(std::move(n));
}

int Graph::sum(int x) {
    const Tensor& xv = val(check(x));
    Node n;
    n.op = Op::Sum;
    n.in = {x};
    n.requires_grad = requires_grad(x);
    n.val = Tensor(Shape{1, 1, 1, 1});
    n.val.v[0] = static_cast<float>(kernels::sum_f64(xv.data(), xv.v.size()));
    return push(std::move(n));
}

int Graph::mean(int x) {
    const Tensor& xv = val(check(x));
    if (xv.numel() == 0) throw_shape("mean of empty tensor");
    Node n;
    n.op = Op::Mean;
    n.in = {x};
    n.requires_grad = requires_grad(x);
    n.val = Tensor(Shape{1, 1, 1, 1});
    n.val.v[0] =
        static_cast<float>(kernels::sum_f64(xv.data(), xv.v.size()) / static_cast<double>(xv.numel()));
    return push(std::move(n));
}

int Graph::mse(int x, int y) {
    const Tensor& xv = val(check(x));
    const Tensor& yv = val(check(y));
    if (!(xv.shape == yv.shape))
        throw_shape("mse shape mismatch " + xv.shape.str() + " vs " + yv.shape.str());
    if (xv.numel() == 0) throw_shape("mse of empty tensor");
    Node n;
    n.op = Op::MseLoss;
    n.in = {x, y};
    n.requires_grad = requires_grad(x) || requires_grad(y);
    n.val = Tensor(Shape{1, 1, 1, 1});
    n.val.v[0] = static_cast<float>(kernels::sse_f64(xv.data(), yv.data(), xv.v.size()) /
                                    static_cast<double>(xv.numel()));
    return push(std::move(n));
}

void Graph::backward(int loss) {
    const Node& ln = node_at(loss);
    if (ln.val.numel() != 1) throw_contract("backward target must be scalar, got " + ln.val.shape.str());
    if (!ln.requires_grad)
        throw_contract("backward target does not depend on any gradient-enabled leaf");
    g_backward_count.fetch_add(1);

    // mark the nodes whose gradient is actually needed
    std::vector<char> needed(nodes_.size(), 0);
    needed[static_cast<size_t>(loss)] = 1;
    for (int id = loss; id >= 0; --id) {
        if (!needed[static_cast<size_t>(id)]) continue;
        for (int in : nodes_[static_cast<size_t>(id)].in)
            if (nodes_[static_cast<size_t>(in)].requires_grad) needed[static_cast<size_t>(in)] = 1;
    }
    for (int id = 0; id <= loss; ++id)
        if (needed[static_cast<size_t>(id)]) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (n.grad.empty()) n.grad = Tensor(n.val.shape);
        }
    nodes_[static_cast<size_t>(loss)].grad.v[0] += 1.0f;

    for (int id = loss; id >= 0; --id)
        if (needed[static_cast<size_t>(id)] && nodes_[static_cast<size_t>(id)].op != Op::Leaf)
            backward_node(id);
}

void Graph::backward_node(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    const Tensor& g = n.grad;
    const auto& k = kernels::active();
    auto wants = [&](int ix) { return nodes_[static_cast<size_t>(n.in[ix])].requires_grad; };
    auto gin = [&](int ix) -> Tensor& { return nodes_[static_cast<size_t>(n.in[ix])].grad; };
    auto vin = [&](int ix) -> const Tensor& { return nodes_[static_cast<size_t>(n.in[ix])].val; };

    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Conv2d: {
            const kernels::ConvDims d = conv_dims(n);
            if (wants(0)) {
                Tensor dx(vin(0).shape);
                // For stride 1 the input gradient is itself a convolution: the
                // upstream gradient correlated with the spatially flipped,
                // channel-transposed weights at padding k-1-pad.
                if (d.stride == 1 && d.kh == d.kw && d.pad <= d.kh - 1) {
                    const Tensor& w = vin(1);
                    Tensor wf(Shape{d.in_c, d.out_c, d.kh, d.kw});
                    for (int oc = 0; oc < d.out_c; ++oc)
                        for (int ic = 0; ic < d.in_c; ++ic)
                            for (int ky = 0; ky < d.kh; ++ky)
                                for (int kx = 0; kx < d.kw; ++kx)
                                    wf.at(ic, oc, ky, kx) = w.at(oc, ic, d.kh - 1 - ky, d.kw - 1 - kx);
                    const Tensor zb(Shape{1, d.in_c, 1, 1});
                    kernels::ConvDims bd;
                    bd.n = d.n;
                    bd.in_c = d.out_c;
                    bd.in_h = d.out_h;
                    bd.in_w = d.out_w;
                    bd.out_c = d.in_c;
                    bd.kh = d.kh;
                    bd.kw = d.kw;
                    bd.stride = 1;
                    bd.pad = d.kh - 1 - d.pad;
                    bd.out_h = d.in_h;
                    bd.out_w = d.in_w;
                    k.conv2d_fwd(g.data(), wf.data(), zb.data(), dx.data(), bd);
                } else {
                    kernels::conv2d_dinput_generic(g.data(), vin(1).data(), dx.data(), d);
                }
                k.acc(gin(0).data(), dx.data(), dx.v.size());
            }
            if (wants(1)) {
                Tensor dw(vin(1).shape);
                k.conv2d_dw(vin(0).data(), g.data(), dw.data(), d);
                k.acc(gin(1).data(), dw.data(), dw.v.size());
            }
            if (wants(2)) {
                Tensor db(vin(2).shape);
                kernels::conv2d_dbias(g.data(), db.data(), d);
                k.acc(gin(2).data(), db.data(), db.v.size());
            }
            break;
        }
        case Op::Add:
            if (wants(0)) k.acc(gin(0).data(), g.data(), g.v.size());
            if (wants(1)) k.acc(gin(1).data(), g.data(), g.v.size());
            break;
        case Op::Sub:
            if (wants(0)) k.acc(gin(0).data(), g.data(), g.v.size());
            if (wants(1)) k.axpy(gin(1).data(), -1.0f, g.data(), g.v.size());
            break;
        case Op::Mul:
            if (wants(0)) k.macc(gin(0).data(), g.data(), vin(1).data(), g.v.size());
            if (wants(1)) k.macc(gin(1).data(), g.data(), vin(0).data(), g.v.size());
            break;
        case Op::Div: {
            if (wants(0)) {
                Tensor t(g.shape);
                k.div(g.data(), vin(1).data(), t.data(), g.v.size());
                k.acc(gin(0).data(), t.data(), t.v.size());
            }
            if (wants(1)) {
                // d/dy (x/y) = -x/y^2
                Tensor t(g.shape);
                k.mul(g.data(), vin(0).data(), t.data(), g.v.size());
                Tensor y2(g.shape);
                k.mul(vin(1).data(), vin(1).data(), y2.data(), g.v.size());
                Tensor q(g.shape);
                k.div(t.data(), y2.data(), q.data(), g.v.size());
                k.axpy(gin(1).data(), -1.0f, q.data(), q.v.size());
            }
            break;
        }
        case Op::Relu:
            if (wants(0)) k.relu_bwd(gin(0).data(), g.data(), vin(0).data(), g.v.size());
            break;
        case Op::Clamp01:
            if (wants(0)) k.clamp01_bwd(gin(0).data(), g.data(), vin(0).data(), g.v.size());
            break;
        case Op::Scale:
            if (wants(0)) k.axpy(gin(0).data(), n.a, g.data(), g.v.size());
            break;
        case Op::AddScalar:
            if (wants(0)) k.acc(gin(0).data(), g.data(), g.v.size());
            break;
        case Op::ConcatC: {
            const Shape os = n.val.shape;
            const size_t plane = static_cast<size_t>(os.h) * os.w;
            for (int img = 0; img < os.n; ++img) {
                const float* gp = g.data() + static_cast<size_t>(img) * os.c * plane;
                for (size_t ix = 0; ix < n.in.size(); ++ix) {
                    const size_t block = static_cast<size_t>(vin(static_cast<int>(ix)).shape.c) * plane;
                    if (wants(static_cast<int>(ix)))
                        k.acc(gin(static_cast<int>(ix)).data() + static_cast<size_t>(img) * block, gp,
                              block);
                    gp += block;
                }
            }
            break;
        }
        case Op::Reshape:
            if (wants(0)) k.acc(gin(0).data(), g.data(), g.v.size());
            break;
        case Op::Sum:
            if (wants(0)) {
                const float g0 = g.v[0];
                Tensor& dst = gin(0);
                for (float& x : dst.v) x += g0;
            }
            break;
        case Op::Mean:
            if (wants(0)) {
                const float f = static_cast<float>(static_cast<double>(g.v[0]) /
                                                   static_cast<double>(vin(0).numel()));
                Tensor& dst = gin(0);
                for (float& x : dst.v) x += f;
            }
            break;
        case Op::MseLoss: {
            const float f = static_cast<float>(2.0 * static_cast<double>(g.v[0]) /
                                               static_cast<double>(vin(0).numel()));
            Tensor t(vin(0).shape);
            k.sub(vin(0).data(), vin(1).data(), t.data(), t.v.size());
            if (wants(0)) k.axpy(gin(0).data(), f, t.data(), t.v.size());
            if (wants(1)) k.axpy(gin(1).data(), -f, t.data(), t.v.size());
            break;
        }
    }
}

}  // namespace hazekit
