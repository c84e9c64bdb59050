#include "hazekit/model.h"

#include <cmath>

#include "hazekit/metrics.h"
#include "hazekit/rng.h"
#include "hazekit/util.h"

namespace hazekit {

namespace {

struct LayerDims {
    int in_c, out_c;
};
constexpr LayerDims kArch[5] = {{3, 8}, {8, 8}, {16, 8}, {16, 8}, {24, 3}};
constexpr int kKernel = 3;
constexpr uint16_t kCheckpointVersion = 1;

// The factor map K must span roughly [0, 1/t_min] ~ 10 while the conv output
// starts near zero, so the head applies a fixed gain: under plain SGD the
// gradient step on the last layer is effectively multiplied by the gain,
// letting K reach the far end of its range within the default epoch budget.
constexpr float kHeadGain = 3.0f;

// The amplification map is clamped to [0, kKCap]: transmissions below
// 1/kKCap count as unrecoverable, which keeps the haze inverse well-posed
// instead of letting the head extrapolate arbitrarily large gains.
constexpr float kKCap = 4.0f;

// Hidden activations get a smaller fixed gain for the same reason; their
// init bound is divided by the gain so the forward scale at step zero is
// unchanged and only the update dynamics speed up.
constexpr float kHidGain = 1.5f;

void check_params(const ModelParams& p) {
    if (p.layers.size() != 5) throw_shape("model must have 5 conv layers");
    for (size_t i = 0; i < 5; ++i) {
        const Shape ws = p.layers[i].w.shape;
        const Shape expect{kArch[i].out_c, kArch[i].in_c, kKernel, kKernel};
        if (!(ws == expect))
            throw_shape("layer " + std::to_string(i) + " weight shape " + ws.str() + ", expected " +
                        expect.str());
        if (p.layers[i].b.numel() != kArch[i].out_c)
            throw_shape("layer " + std::to_string(i) + " bias size mismatch");
    }
}

}  // namespace

ModelParams ModelParams::zeros() {
    ModelParams p;
    for (const LayerDims& d : kArch) {
        ConvLayer l;
        l.w = Tensor(Shape{d.out_c, d.in_c, kKernel, kKernel});
        l.b = Tensor(Shape{1, d.out_c, 1, 1});
        p.layers.push_back(std::move(l));
    }
    return p;
}

ModelParams ModelParams::random_init(uint64_t seed) {
    ModelParams p = zeros();
    for (size_t i = 0; i < p.layers.size(); ++i) {
        Rng rng(substream_seed(seed, "layer", i));
        const float fan_in = static_cast<float>(kArch[i].in_c * kKernel * kKernel);
        const float gain = i + 1 < p.layers.size() ? kHidGain : 1.0f;
        const float bound = std::sqrt(6.0f / fan_in) / gain;
        for (float& w : p.layers[i].w.v) w = rng.uniform_f(-bound, bound);
    }
    // hidden biases start at zero; the head bias starts at 1/gain so the
    // initial K map is ~1 and the untrained model is near the identity,
    // a far better starting point than the all-white K = 0 prediction
    for (float& b : p.layers.back().b.v) b = 1.0f / kHeadGain;
    return p;
}

uint64_t ModelParams::fingerprint() const {
    std::string sig = "kmap-dehaze-v1";
    for (const ConvLayer& l : layers) sig += ";" + l.w.shape.str() + "+" + l.b.shape.str();
    return fnv1a64(sig);
}

uint64_t ModelParams::value_hash() const {
    uint64_t h = fingerprint();
    for (const ConvLayer& l : layers) {
        h = tensor_hash(l.w, h);
        h = tensor_hash(l.b, h);
    }
    return h;
}

int64_t ModelParams::param_count() const {
    int64_t n = 0;
    for (const ConvLayer& l : layers) n += l.w.numel() + l.b.numel();
    return n;
}

ModelForward build_forward(Graph& g, const ModelParams& p, int x, bool train_params) {
    check_params(p);
    if (g.val(x).shape.c != 3) throw_shape("model input must have 3 channels, got " + g.val(x).shape.str());

    ModelForward f;
    for (const ConvLayer& l : p.layers) {
        f.w_ids.push_back(g.leaf(l.w, train_params));
        f.b_ids.push_back(g.leaf(l.b, train_params));
    }
    auto conv = [&](int in, int layer) { return g.conv2d(in, f.w_ids[layer], f.b_ids[layer], 1, 1); };

    auto hidden = [&](int in, int layer) { return g.relu(g.scale(conv(in, layer), kHidGain)); };

    const int h1 = hidden(x, 0);
    const int h2 = hidden(h1, 1);
    const int h3 = hidden(g.concat_channels({h1, h2}), 2);
    const int h4 = hidden(g.concat_channels({h2, h3}), 3);
    const int z = g.scale(conv(g.concat_channels({h2, h3, h4}), 4), kHeadGain);
    f.k = g.sub(g.relu(z), g.relu(g.add_scalar(z, -kKCap)));

    // J = K*I - K + 1, kept unclamped so gradients always flow
    f.pred = g.add_scalar(g.sub(g.mul(f.k, x), f.k), 1.0f);
    return f;
}

Tensor predict_raw(const ModelParams& p, const Tensor& input) {
    Graph g;
    const int x = g.leaf(input);
    const ModelForward f = build_forward(g, p, x, false);
    return g.val(f.pred);
}

Tensor predict(const ModelParams& p, const Tensor& input) { return clamp01(predict_raw(p, input)); }

TrainStats train_model(ModelParams& p, const Tensor& hazy, const Tensor& clear, const TrainConfig& cfg) {
    check_params(p);
    if (!(hazy.shape == clear.shape)) throw_shape("training pairs must share a shape");
    if (cfg.epochs < 0) throw_config("epochs must be >= 0");
    if (cfg.batch < 1) throw_config("batch size must be >= 1");
    if (!(cfg.lr > 0.0f)) throw_config("learning rate must be > 0");
    if (cfg.loss != "mse" && cfg.loss != "dssim") throw_config("loss must be mse or dssim");

    const int count = hazy.shape.n;
    if (count == 0) throw_shape("empty training set");

    TrainStats stats;
    std::vector<int> order(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) order[static_cast<size_t>(i)] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(substream_seed(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        double epoch_acc = 0.0;
        int steps = 0;
        for (int start = 0; start < count; start += cfg.batch) {
            const int m = std::min(cfg.batch, count - start);
            Tensor bx(Shape{m, hazy.shape.c, hazy.shape.h, hazy.shape.w});
            Tensor by(bx.shape);
            const size_t img = static_cast<size_t>(hazy.shape.c) * hazy.shape.h * hazy.shape.w;
            for (int j = 0; j < m; ++j) {
                const int src = order[static_cast<size_t>(start + j)];
                std::copy_n(hazy.v.begin() + static_cast<long>(static_cast<size_t>(src) * img), img,
                            bx.v.begin() + static_cast<long>(static_cast<size_t>(j) * img));
                std::copy_n(clear.v.begin() + static_cast<long>(static_cast<size_t>(src) * img), img,
                            by.v.begin() + static_cast<long>(static_cast<size_t>(j) * img));
            }

            Graph g;
            const int x = g.leaf(std::move(bx));
            const int y = g.leaf(std::move(by));
            const ModelForward f = build_forward(g, p, x, true);
            int loss;
            if (cfg.loss == "mse") {
                loss = g.mse(f.pred, y);
            } else {
                loss = g.add_scalar(g.scale(metrics::build_ssim(g, f.pred, y), -1.0f), 1.0f);
            }
            const float lval = g.val(loss).v[0];
            if (!std::isfinite(lval))
                throw_contract("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                               " step " + std::to_string(steps));
            g.backward(loss);

            const auto& k = kernels::active();
            for (size_t li = 0; li < p.layers.size(); ++li) {
                ConvLayer& l = p.layers[li];
                k.axpy(l.w.data(), -cfg.lr, g.grad(f.w_ids[li]).data(), l.w.v.size());
                k.axpy(l.b.data(), -cfg.lr, g.grad(f.b_ids[li]).data(), l.b.v.size());
            }
            stats.step_loss.push_back(lval);
            epoch_acc += static_cast<double>(lval);
            ++steps;
        }
        stats.epoch_loss.push_back(steps > 0 ? epoch_acc / steps : 0.0);
    }
    return stats;
}

void save_checkpoint(const std::string& path, const ModelParams& p) {
    check_params(p);
    ByteWriter w;
    w.bytes("HZCK", 4);
    w.u16(kCheckpointVersion);
    w.u64(p.fingerprint());
    w.u16(static_cast<uint16_t>(p.layers.size()));
    for (const ConvLayer& l : p.layers) {
        w.u16(static_cast<uint16_t>(l.w.shape.n));
        w.u16(static_cast<uint16_t>(l.w.shape.c));
        w.u16(static_cast<uint16_t>(l.w.shape.h));
        w.u16(static_cast<uint16_t>(l.w.shape.w));
        w.f32_array(l.w.data(), l.w.v.size());
        w.f32_array(l.b.data(), l.b.v.size());
    }
    write_file_atomic(path, w.data().data(), w.data().size());
}

ModelParams load_checkpoint(const std::string& path) {
    ByteReader r(read_file(path));
    char magic[4];
    for (char& ch : magic) ch = static_cast<char>(r.u8());
    if (std::string(magic, 4) != "HZCK") throw_format(path + ": not a checkpoint file");
    if (r.u16() != kCheckpointVersion) throw_format(path + ": unsupported checkpoint version");
    const uint64_t fp = r.u64();
    ModelParams p = ModelParams::zeros();
    if (fp != p.fingerprint())
        throw_format(path + ": architecture fingerprint mismatch (incompatible checkpoint)");
    const uint16_t layer_count = r.u16();
    if (layer_count != p.layers.size()) throw_format(path + ": wrong layer count");
    for (ConvLayer& l : p.layers) {
        const Shape got{r.u16(), r.u16(), r.u16(), r.u16()};
        if (!(got == l.w.shape))
            throw_format(path + ": layer shape " + got.str() + " does not match " + l.w.shape.str());
        r.f32_array(l.w.data(), l.w.v.size());
        r.f32_array(l.b.data(), l.b.v.size());
    }
    r.expect_end(path);
    return p;
}

}  // namespace hazekit
