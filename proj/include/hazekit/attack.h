#pragma once

#include <string>
#include <vector>

#include "hazekit/model.h"
#include "hazekit/rng.h"
#include "hazekit/tensor.h"

namespace hazekit {

// Sign-gradient perturbation search against the dehazing model. Kinds:
//   PredTarget   push the prediction away from a frozen snapshot of the
//                model's own clean-input prediction
//   MaskedPred   same objective, but the perturbation only acts inside the
//                hazy-region mask derived from the clean prediction
//   CleanTarget  push the prediction away from the ground-truth clear image
//   InputAffinity pull the prediction toward the hazy input itself,
//                i.e. minimize their distance (the restorer un-restores)
//   NoiseOnly    a single budget-clipped uniform draw; no gradients at all
enum class AttackKind { PredTarget, MaskedPred, CleanTarget, InputAffinity, NoiseOnly };

enum class AttackDistance { Mse, Ssim };

const char* attack_kind_letter(AttackKind k);  // P M G I N
AttackKind attack_kind_from_letter(const std::string& s);
const char* distance_name(AttackDistance d);
AttackDistance distance_from_name(const std::string& s);

struct AttackConfig {
    AttackKind kind = AttackKind::PredTarget;
    AttackDistance distance = AttackDistance::Mse;
    float epsilon = 8.0f / 255.0f;
    float alpha = 2.0f / 255.0f;
    int steps = 10;
    uint64_t seed = 0;
};

struct AttackResult {
    Tensor delta;       // final perturbation (pre-mask)
    Tensor adv_input;   // perturbed input actually fed to the model
    Tensor adv_pred;    // clamped prediction on adv_input
    Tensor clean_pred;  // clamped prediction on the clean input
    Tensor mask;        // MaskedPred only
    std::vector<float> loss_trace;  // objective value per step, pre-update
    uint64_t gradient_passes = 0;
    double mask_coverage = 0.0;  // fraction of masked-in pixels (MaskedPred)

    // invariant audit, checked by the engine itself
    float max_abs_perturbation = 0.0f;
    bool budget_ok = true;
    bool range_ok = true;
    bool params_frozen = true;
};

// uniform U(-eps, eps) start, then clipped into [0-I, 1-I]
Tensor init_delta(const Tensor& input, float eps, Rng& rng);

// one ascent move: delta += alpha*sign(grad) (sign(0)=0), clip to [-eps,eps],
// then clip to [0-I, 1-I]; exactly this order
void pgd_step(Tensor& delta, const Tensor& grad, float alpha, float eps, const Tensor& input);

// Binary mask (1 where the clean prediction removed more haze than average):
// diff = I - pred; pixel is masked in iff any channel diff exceeds the
// per-image mean of diff over all channels and pixels (strict >). All
// channels of a masked-in pixel are 1.
Tensor compute_haze_mask(const Tensor& input, const Tensor& clean_pred);
double mask_coverage(const Tensor& mask);

// Shared inner loop: maximizes sign*distance(model(I + delta[*mask]), target).
// Used directly by the defense trainer with its own targets.
Tensor craft_delta(const ModelParams& model, const Tensor& input, const Tensor& target,
                   AttackDistance dist, float eps, float alpha, int steps, Rng& rng,
                   const Tensor* mask = nullptr, float loss_sign = 1.0f,
                   std::vector<float>* trace = nullptr, uint64_t* gradient_passes = nullptr);

// full protocol for one input (any batch size; the CLI runs one image at a
// time so each image owns a seed substream)
AttackResult run_attack(const ModelParams& model, const Tensor& input, const AttackConfig& cfg,
                        const Tensor* clean_target = nullptr);

}  // namespace hazekit
