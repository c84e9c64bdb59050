#include "hazekit/attack.h"

#include <cmath>

#include "hazekit/metrics.h"

namespace hazekit {

const char* attack_kind_letter(AttackKind k) {
    switch (k) {
        case AttackKind::PredTarget: return "P";
        case AttackKind::MaskedPred: return "M";
        case AttackKind::CleanTarget: return "G";
        case AttackKind::InputAffinity: return "I";
        case AttackKind::NoiseOnly: return "N";
    }
    return "?";
}

AttackKind attack_kind_from_letter(const std::string& s) {
    if (s == "P") return AttackKind::PredTarget;
    if (s == "M") return AttackKind::MaskedPred;
    if (s == "G") return AttackKind::CleanTarget;
    if (s == "I") return AttackKind::InputAffinity;
    if (s == "N") return AttackKind::NoiseOnly;
    throw_config("unknown attack kind '" + s + "' (expected P, M, G, I or N)");
}

const char* distance_name(AttackDistance d) { return d == AttackDistance::Mse ? "mse" : "ssim"; }

AttackDistance distance_from_name(const std::string& s) {
    if (s == "mse") return AttackDistance::Mse;
    if (s == "ssim") return AttackDistance::Ssim;
    throw_config("unknown distance '" + s + "' (expected mse or ssim)");
}

Tensor init_delta(const Tensor& input, float eps, Rng& rng) {
    if (eps < 0.0f) throw_config("epsilon must be >= 0");
    Tensor d(input.shape);
    if (eps == 0.0f) return d;
    for (size_t i = 0; i < d.v.size(); ++i) {
        float x = rng.uniform_f(-eps, eps);
        const float lo = -input.v[i];
        const float hi = 1.0f - input.v[i];
        d.v[i] = x < lo ? lo : (x > hi ? hi : x);
    }
    return d;
}

void pgd_step(Tensor& delta, const Tensor& grad, float alpha, float eps, const Tensor& input) {
    if (!(delta.shape == grad.shape) || !(delta.shape == input.shape))
        throw_shape("pgd step shape mismatch");
    for (size_t i = 0; i < delta.v.size(); ++i) {
        const float gv = grad.v[i];
        const float sg = gv > 0.0f ? 1.0f : (gv < 0.0f ? -1.0f : 0.0f);
        float x = delta.v[i] + alpha * sg;
        x = x < -eps ? -eps : (x > eps ? eps : x);
        const float lo = -input.v[i];
        const float hi = 1.0f - input.v[i];
        x = x < lo ? lo : (x > hi ? hi : x);
        delta.v[i] = x;
    }
}

Tensor compute_haze_mask(const Tensor& input, const Tensor& clean_pred) {
    if (!(input.shape == clean_pred.shape)) throw_shape("mask inputs must share a shape");
    const Shape s = input.shape;
    Tensor mask(s);
    const size_t plane = static_cast<size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
        double acc = 0.0;
        const size_t base = static_cast<size_t>(n) * s.c * plane;
        for (size_t i = 0; i < static_cast<size_t>(s.c) * plane; ++i)
            acc += static_cast<double>(input.v[base + i]) - static_cast<double>(clean_pred.v[base + i]);
        const double mu = acc / (static_cast<double>(s.c) * plane);
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
                bool on = false;
                for (int c = 0; c < s.c && !on; ++c) {
                    const double diff = static_cast<double>(input.at(n, c, y, x)) -
                                        static_cast<double>(clean_pred.at(n, c, y, x));
                    on = diff > mu;
                }
                for (int c = 0; c < s.c; ++c) mask.at(n, c, y, x) = on ? 1.0f : 0.0f;
            }
    }
    return mask;
}

double mask_coverage(const Tensor& mask) {
    if (mask.numel() == 0) return 0.0;
    return kernels::sum_f64(mask.data(), mask.v.size()) / static_cast<double>(mask.numel());
}

Tensor craft_delta(const ModelParams& model, const Tensor& input, const Tensor& target,
                   AttackDistance dist, float eps, float alpha, int steps, Rng& rng, const Tensor* mask,
                   float loss_sign, std::vector<float>* trace, uint64_t* gradient_passes) {
    if (steps < 0) throw_config("attack steps must be >= 0");
    if (!(alpha > 0.0f)) throw_config("alpha must be > 0");
    Tensor delta = init_delta(input, eps, rng);
    if (eps == 0.0f || steps == 0) return delta;

    int mask_leaf = -1;
    for (int t = 0; t < steps; ++t) {
        Graph g;
        const int x = g.leaf(input);
        const int d = g.leaf(delta, true);
        int eff = d;
        if (mask != nullptr) {
            mask_leaf = g.leaf(*mask);
            eff = g.mul(d, mask_leaf);
        }
        const int adv = g.add(x, eff);
        const ModelForward f = build_forward(g, model, adv, false);
        const int tgt = g.leaf(target);
        int loss;
        if (dist == AttackDistance::Mse) {
            loss = g.mse(f.pred, tgt);
        } else {
            loss = g.add_scalar(g.scale(metrics::build_ssim(g, f.pred, tgt), -1.0f), 1.0f);
        }
        if (loss_sign != 1.0f) loss = g.scale(loss, loss_sign);
        g.backward(loss);
        if (trace) trace->push_back(g.val(loss).v[0]);
        if (gradient_passes) ++*gradient_passes;
        pgd_step(delta, g.grad(d), alpha, eps, input);
    }
    (void)mask_leaf;
    return delta;
}

namespace {

Tensor apply_mask(const Tensor& delta, const Tensor* mask) {
    if (!mask) return delta;
    Tensor out(delta.shape);
    kernels::active().mul(delta.data(), mask->data(), out.data(), out.v.size());
    return out;
}

void audit(AttackResult& r, const Tensor& input, float eps) {
    double worst = 0.0;
    for (size_t i = 0; i < input.v.size(); ++i) {
        const double diff =
            static_cast<double>(r.adv_input.v[i]) - static_cast<double>(input.v[i]);
        worst = std::max(worst, std::fabs(diff));
        if (r.adv_input.v[i] < 0.0f || r.adv_input.v[i] > 1.0f) r.range_ok = false;
    }
    r.max_abs_perturbation = static_cast<float>(worst);
    r.budget_ok = worst <= static_cast<double>(eps) + 1e-6;
}

}  // namespace

AttackResult run_attack(const ModelParams& model, const Tensor& input, const AttackConfig& cfg,
                        const Tensor* clean_target) {
    if (cfg.epsilon < 0.0f || cfg.epsilon > 1.0f) throw_config("epsilon must lie in [0, 1]");
    for (float v : input.v)
        if (v < 0.0f || v > 1.0f) throw_config("attack input must lie in [0, 1]");
    if (cfg.kind == AttackKind::CleanTarget) {
        if (clean_target == nullptr) throw_config("clean-target attack needs the ground-truth image");
        if (!(clean_target->shape == input.shape)) throw_shape("ground-truth shape mismatch");
    }

    const uint64_t params_before = model.value_hash();
    const uint64_t backward_before = Graph::backward_count();

    AttackResult r;
    const Tensor pred_raw = predict_raw(model, input);
    r.clean_pred = clamp01(pred_raw);

    Rng rng(cfg.seed);
    if (cfg.kind == AttackKind::NoiseOnly) {
        // ignores alpha, steps and distance by definition
        r.delta = init_delta(input, cfg.epsilon, rng);
        r.adv_input = Tensor(input.shape);
        kernels::active().add(input.data(), r.delta.data(), r.adv_input.data(), input.v.size());
    } else if (cfg.epsilon == 0.0f) {
        r.delta = Tensor(input.shape);
        r.adv_input = input;
    } else {
        const Tensor* mask_ptr = nullptr;
        if (cfg.kind == AttackKind::MaskedPred) {
            r.mask = compute_haze_mask(input, r.clean_pred);
            r.mask_coverage = mask_coverage(r.mask);
            mask_ptr = &r.mask;
        }
        const Tensor* target = &pred_raw;
        float sign = 1.0f;
        if (cfg.kind == AttackKind::CleanTarget) target = clean_target;
        if (cfg.kind == AttackKind::InputAffinity) {
            target = &input;
            sign = -1.0f;
        }
        r.delta = craft_delta(model, input, *target, cfg.distance, cfg.epsilon, cfg.alpha, cfg.steps,
                              rng, mask_ptr, sign, &r.loss_trace, &r.gradient_passes);
        const Tensor eff = apply_mask(r.delta, mask_ptr);
        r.adv_input = Tensor(input.shape);
        kernels::active().add(input.data(), eff.data(), r.adv_input.data(), input.v.size());
    }

    r.adv_pred = (cfg.epsilon == 0.0f && cfg.kind != AttackKind::NoiseOnly)
                     ? r.clean_pred
                     : predict(model, r.adv_input);
    audit(r, input, cfg.epsilon);
    r.params_frozen = model.value_hash() == params_before;
    if (cfg.kind == AttackKind::NoiseOnly && Graph::backward_count() != backward_before)
        throw_contract("noise-only attack performed gradient work");
    if (!r.params_frozen) throw_contract("attack mutated model parameters");
    return r;
}

}  // namespace hazekit
