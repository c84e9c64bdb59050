#pragma once

#include <string>
#include <vector>

#include "hazekit/graph.h"
#include "hazekit/tensor.h"

namespace hazekit {

// Five 3x3 conv layers with skip concatenations estimate a per-pixel factor
// map K; the restored image is K*I - K + 1, left unclamped inside the graph
// (metrics and export clamp separately).
//   conv1: 3 -> 8, relu
//   conv2: 8 -> 8, relu
//   conv3: cat(h1,h2) 16 -> 8, relu
//   conv4: cat(h2,h3) 16 -> 8, relu
//   conv5: cat(h2,h3,h4) 24 -> 3 (no relu) = K
struct ConvLayer {
    Tensor w;  // (out_c, in_c, 3, 3)
    Tensor b;  // (1, out_c, 1, 1)
};

struct ModelParams {
    std::vector<ConvLayer> layers;

    static ModelParams zeros();
    static ModelParams random_init(uint64_t seed);  // uniform He-style fan-in scaling

    // shape-only hash: two checkpoints interoperate iff fingerprints match
    uint64_t fingerprint() const;
    // content hash over all weights/biases; used for freeze checks
    uint64_t value_hash() const;
    int64_t param_count() const;
};

struct ModelForward {
    int k = -1;     // K map node
    int pred = -1;  // raw restored image node (unclamped)
    std::vector<int> w_ids, b_ids;
};

// Appends the network to `g`, reading image node `x`; parameters become
// gradient-enabled leaves when `train_params`.
ModelForward build_forward(Graph& g, const ModelParams& p, int x, bool train_params);

Tensor predict_raw(const ModelParams& p, const Tensor& input);
Tensor predict(const ModelParams& p, const Tensor& input);  // clamped to [0,1]

struct TrainConfig {
    int epochs = 30;
    float lr = 0.05f;
    int batch = 8;
    uint64_t seed = 1;
    std::string loss = "mse";  // "mse" | "dssim"
};

struct TrainStats {
    std::vector<float> step_loss;
    std::vector<double> epoch_loss;
};

// plain SGD on (hazy -> clear) pairs; throws Error(Contract) on divergence
TrainStats train_model(ModelParams& p, const Tensor& hazy, const Tensor& clear, const TrainConfig& cfg);

void save_checkpoint(const std::string& path, const ModelParams& p);
ModelParams load_checkpoint(const std::string& path);

}  // namespace hazekit
