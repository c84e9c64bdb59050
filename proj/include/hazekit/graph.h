#pragma once

#include <cstdint>
#include <vector>

#include "hazekit/kernels.h"
#include "hazekit/tensor.h"

namespace hazekit {

// Reverse-mode tape over NCHW f32 tensors. Nodes are appended in evaluation
// order (so the tape is already topologically sorted) and forward values are
// computed eagerly at build time; backward() walks the tape once in reverse.
// There is no broadcasting except the conv bias over its output channel.
class Graph {
public:
    enum class Op : uint8_t {
        Leaf, Conv2d, Add, Sub, Mul, Div, Relu, Clamp01, Scale, AddScalar,
        ConcatC, Reshape, Sum, Mean, MseLoss,
    };

    int leaf(Tensor t, bool requires_grad = false);

    // y = conv(x, w) + b; w is (out_c, in_c, kh, kw), b holds out_c values,
    // zero padding `pad` on both axes.
    int conv2d(int x, int w, int b, int stride = 1, int pad = 0);

    int add(int x, int y);
    int sub(int x, int y);
    int mul(int x, int y);
    int div(int x, int y);  // caller keeps the denominator away from zero
    int relu(int x);
    int clamp01(int x);  // gradient passes only where 0 < x < 1
    int scale(int x, float s);
    int add_scalar(int x, float s);
    int concat_channels(const std::vector<int>& xs);
    int reshape(int x, Shape s);

    // scalar-valued reductions, f64 accumulation in flat order
    int sum(int x);
    int mean(int x);
    int mse(int x, int y);  // mean of squared differences

    // Accumulates d(loss)/d(node) for every gradient-enabled node that feeds
    // `loss`, which must be scalar and must depend on at least one
    // gradient-enabled leaf.
    void backward(int loss);

    const Tensor& val(int id) const { return node_at(id).val; }
    bool requires_grad(int id) const { return node_at(id).requires_grad; }
    bool has_grad(int id) const { return !node_at(id).grad.empty(); }
    const Tensor& grad(int id) const;

    int size() const { return static_cast<int>(nodes_.size()); }

    // process-global count of backward() invocations; lets callers prove a
    // code path performed no gradient work
    static uint64_t backward_count();

private:
    struct Node {
        Op op = Op::Leaf;
        Tensor val;
        Tensor grad;
        bool requires_grad = false;
        std::vector<int> in;
        int stride = 1, pad = 0;  // conv only
        float a = 0.0f;           // scale factor / added constant
    };

    const Node& node_at(int id) const;
    Node& node_at(int id);
    int check(int id) const;
    int push(Node n);
    int binary_op(Op op, int x, int y);
    int unary_op(Op op, int x, float a = 0.0f);
    kernels::ConvDims conv_dims(const Node& n) const;
    void backward_node(int id);

    std::vector<Node> nodes_;
};

}  // namespace hazekit
