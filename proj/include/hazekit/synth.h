#pragma once

#include <cstdint>
#include <vector>

#include "hazekit/dataset.h"
#include "hazekit/tensor.h"

namespace hazekit {

// Procedural scene: a softly textured background gradient at one constant
// depth plus `objects` flat-colored rectangles/disks, each at its own nearer
// depth. Everything stays inside [0,1] by construction (no clipping).
struct SceneSpec {
    int h = 32, w = 32;
    int objects = 4;
    uint64_t seed = 0;
};

struct Scene {
    Tensor clear;  // (1,3,H,W) in [0,1]
    Tensor depth;  // (1,1,H,W) in [0,1]
};

Scene render_clear(const SceneSpec& spec);

// Atmospheric scattering: I = A + t*(J - A) with t = exp(-beta*d), evaluated
// so I stays in [0,1] exactly and t == 1 yields I == J bitwise.
struct HazeParams {
    float beta = 1.0f;          // >= 0
    float airlight[3] = {0.9f, 0.9f, 0.9f};  // each in [0.6, 1.0]
};

Tensor apply_haze(const Tensor& clear, const Tensor& depth, const HazeParams& p);

// per-pixel transmission map t = exp(-beta*d)
Tensor transmission(const Tensor& depth, float beta);

struct PairMeta {
    uint64_t scene_seed = 0;
    int objects = 0;
    float beta = 0.0f;
    float airlight[3] = {0, 0, 0};
};

struct GenConfig {
    int count = 512;
    int size = 32;
    uint64_t seed = 1;
};

struct GenResult {
    Dataset data;
    std::vector<PairMeta> meta;
};

// beta ~ U[0.8, 2.5], airlight ~ U[0.7, 1.0] with small per-channel jitter;
// every pair draws from its own substream of `seed`.
GenResult gen_dataset(const GenConfig& cfg);

}  // namespace hazekit
