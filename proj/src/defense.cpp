#include "hazekit/defense.h"

#include <cmath>

#include "hazekit/metrics.h"
#include "hazekit/util.h"

namespace hazekit {

const char* defense_mode_letter(DefenseMode m) { return m == DefenseMode::PredTarget ? "P" : "G"; }

DefenseMode defense_mode_from_letter(const std::string& s) {
    if (s == "P") return DefenseMode::PredTarget;
    if (s == "G") return DefenseMode::CleanTarget;
    throw_config("unknown defense mode '" + s + "' (expected P or G)");
}

namespace {

// attacked-validation metrics with a fixed probe seed so epochs compare
// against the same adversary
void attacked_val_metrics(const ModelParams& p, const Dataset& val, float eps, float alpha, int steps,
                          uint64_t seed, double& out_psnr, double& out_ssim, double& out_clean_psnr) {
    const Tensor pred_raw = predict_raw(p, val.hazy);
    Rng rng(substream_seed(seed, "val-probe"));
    Tensor delta = eps > 0.0f
                       ? craft_delta(p, val.hazy, pred_raw, AttackDistance::Mse, eps, alpha, steps, rng)
                       : Tensor(val.hazy.shape);
    Tensor adv(val.hazy.shape);
    kernels::active().add(val.hazy.data(), delta.data(), adv.data(), adv.v.size());
    const Tensor adv_pred = predict(p, adv);
    const Tensor clean_pred = clamp01(pred_raw);

    double psnr_acc = 0.0, ssim_acc = 0.0, clean_acc = 0.0;
    for (int i = 0; i < val.count(); ++i) {
        const Tensor pi = nth_image(adv_pred, i);
        const Tensor ci = nth_image(val.clear, i);
        psnr_acc += metrics::psnr_db(pi, ci);
        ssim_acc += metrics::ssim(pi, ci);
        clean_acc += metrics::psnr_db(nth_image(clean_pred, i), ci);
    }
    out_psnr = psnr_acc / val.count();
    out_ssim = ssim_acc / val.count();
    out_clean_psnr = clean_acc / val.count();
}

}  // namespace

DefenseOutcome defend(const ModelParams& start, const ModelParams& teacher, const Dataset& train,
                      const Dataset& val, const DefenseConfig& cfg) {
    if (cfg.lambda < 0.0f) throw_config("lambda must be >= 0");
    if (cfg.epsilon < 0.0f || cfg.epsilon > 1.0f) throw_config("epsilon must lie in [0, 1]");
    if (cfg.inner_steps.empty()) throw_config("inner step set must not be empty");
    for (int k : cfg.inner_steps)
        if (k < 0) throw_config("inner steps must be >= 0");
    if (cfg.epochs < 0) throw_config("epochs must be >= 0");
    if (cfg.batch < 1) throw_config("batch size must be >= 1");
    if (!(cfg.lr > 0.0f)) throw_config("learning rate must be > 0");
    if (train.count() == 0 || val.count() == 0) throw_shape("defense needs non-empty train and val sets");
    if (teacher.fingerprint() != start.fingerprint())
        throw_config("teacher and student have different architectures");

    const uint64_t teacher_hash = teacher.value_hash();
    DefenseOutcome out;
    out.params = start;

    const int count = train.count();
    std::vector<int> order(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) order[static_cast<size_t>(i)] = i;
    const size_t img = static_cast<size_t>(train.hazy.shape.c) * train.hazy.shape.h * train.hazy.shape.w;

    double window_acc = 0.0;
    int window_n = 0;
    int stable_epochs = 0;
    double prev_psnr = 0.0, prev_ssim = 0.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(substream_seed(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
        Rng ksample_rng(substream_seed(cfg.seed, "ksample", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        for (int bstart = 0, bidx = 0; bstart < count; bstart += cfg.batch, ++bidx) {
            const int m = std::min(cfg.batch, count - bstart);
            Tensor bx(Shape{m, train.hazy.shape.c, train.hazy.shape.h, train.hazy.shape.w});
            Tensor by(bx.shape);
            for (int j = 0; j < m; ++j) {
                const int src = order[static_cast<size_t>(bstart + j)];
                std::copy_n(train.hazy.v.begin() + static_cast<long>(static_cast<size_t>(src) * img),
                            img, bx.v.begin() + static_cast<long>(static_cast<size_t>(j) * img));
                std::copy_n(train.clear.v.begin() + static_cast<long>(static_cast<size_t>(src) * img),
                            img, by.v.begin() + static_cast<long>(static_cast<size_t>(j) * img));
            }

            // adversarial target: frozen teacher pseudo-label or ground truth
            Tensor target = cfg.mode == DefenseMode::PredTarget ? predict_raw(teacher, bx) : by;

            // inner maximization against the current student, fresh start
            Tensor delta(bx.shape);
            if (cfg.lambda > 0.0f && cfg.epsilon > 0.0f) {
                int k = cfg.inner_steps[0];
                if (cfg.inner_steps.size() > 1)
                    k = cfg.inner_steps[ksample_rng.next_below(cfg.inner_steps.size())];
                Rng delta_rng(substream_seed(cfg.seed, "delta", static_cast<uint64_t>(epoch),
                                             static_cast<uint64_t>(bidx)));
                delta = craft_delta(out.params, bx, target, cfg.distance, cfg.epsilon, cfg.alpha, k,
                                    delta_rng, nullptr, 1.0f, nullptr, &out.inner_gradient_passes);
            }

            // outer minimization; delta enters as plain data
            Graph g;
            const int x = g.leaf(bx);
            const int y = g.leaf(std::move(by));
            const ModelForward fc = build_forward(g, out.params, x, true);
            auto dist_loss = [&](int pred, int tgt) {
                return cfg.distance == AttackDistance::Mse
                           ? g.mse(pred, tgt)
                           : g.add_scalar(g.scale(metrics::build_ssim(g, pred, tgt), -1.0f), 1.0f);
            };
            int loss = dist_loss(fc.pred, y);
            if (cfg.lambda > 0.0f) {
                const int d = g.leaf(std::move(delta));
                const int adv = g.add(x, d);
                const ModelForward fa = build_forward(g, out.params, adv, true);
                // both branches read the same parameter values; gradients from
                // the two sets of leaves are applied additively below
                const int tgt = g.leaf(std::move(target));
                loss = g.add(loss, g.scale(dist_loss(fa.pred, tgt), cfg.lambda));
                const float lval = g.val(loss).v[0];
                if (!std::isfinite(lval))
                    throw_contract("defense diverged at epoch " + std::to_string(epoch));
                g.backward(loss);
                const auto& k = kernels::active();
                for (size_t li = 0; li < out.params.layers.size(); ++li) {
                    ConvLayer& l = out.params.layers[li];
                    k.axpy(l.w.data(), -cfg.lr, g.grad(fc.w_ids[li]).data(), l.w.v.size());
                    k.axpy(l.w.data(), -cfg.lr, g.grad(fa.w_ids[li]).data(), l.w.v.size());
                    k.axpy(l.b.data(), -cfg.lr, g.grad(fc.b_ids[li]).data(), l.b.v.size());
                    k.axpy(l.b.data(), -cfg.lr, g.grad(fa.b_ids[li]).data(), l.b.v.size());
                }
                out.step_loss.push_back(lval);
                window_acc += static_cast<double>(lval);
            } else {
                const float lval = g.val(loss).v[0];
                if (!std::isfinite(lval))
                    throw_contract("defense diverged at epoch " + std::to_string(epoch));
                g.backward(loss);
                const auto& k = kernels::active();
                for (size_t li = 0; li < out.params.layers.size(); ++li) {
                    ConvLayer& l = out.params.layers[li];
                    k.axpy(l.w.data(), -cfg.lr, g.grad(fc.w_ids[li]).data(), l.w.v.size());
                    k.axpy(l.b.data(), -cfg.lr, g.grad(fc.b_ids[li]).data(), l.b.v.size());
                }
                out.step_loss.push_back(lval);
                window_acc += static_cast<double>(lval);
            }
            if (++window_n == cfg.loss_window) {
                out.window_loss.push_back(window_acc / window_n);
                window_acc = 0.0;
                window_n = 0;
            }
        }

        double vp = 0.0, vs = 0.0, vc = 0.0;
        attacked_val_metrics(out.params, val, cfg.epsilon, cfg.alpha, cfg.val_attack_steps, cfg.seed, vp,
                             vs, vc);
        out.val_psnr.push_back(vp);
        out.val_ssim.push_back(vs);
        out.val_clean_psnr.push_back(vc);
        out.epochs_run = epoch + 1;

        if (epoch > 0 && std::fabs(vp - prev_psnr) < cfg.stop_dpsnr &&
            std::fabs(vs - prev_ssim) < cfg.stop_dssim) {
            if (++stable_epochs >= cfg.stop_patience) {
                out.early_stopped = true;
                prev_psnr = vp;
                prev_ssim = vs;
                break;
            }
        } else {
            stable_epochs = 0;
        }
        prev_psnr = vp;
        prev_ssim = vs;
    }
    if (window_n > 0) out.window_loss.push_back(window_acc / window_n);

    out.teacher_frozen = teacher.value_hash() == teacher_hash;
    if (!out.teacher_frozen) throw_contract("defense mutated the frozen teacher");
    return out;
}

std::vector<AbRow> evaluate_defense(const ModelParams& before, const ModelParams& after,
                                    const Dataset& val, const std::vector<AttackKind>& kinds,
                                    const std::vector<float>& eps_list, int steps, uint64_t seed) {
    if (before.fingerprint() != after.fingerprint())
        throw_config("cannot compare checkpoints with different architectures");
    std::vector<AbRow> rows;
    auto mean_metrics = [&](const ModelParams& p, AttackKind kind, float eps, double& mpsnr,
                            double& mssim) {
        double pa = 0.0, sa = 0.0;
        for (int i = 0; i < val.count(); ++i) {
            const Tensor img = nth_image(val.hazy, i);
            const Tensor clr = nth_image(val.clear, i);
            AttackConfig cfg;
            cfg.kind = kind;
            cfg.epsilon = eps;
            cfg.steps = steps;
            cfg.seed = substream_seed(seed, "ab", static_cast<uint64_t>(i));
            const AttackResult res = run_attack(p, img, cfg, &clr);
            pa += metrics::psnr_db(res.adv_pred, clr);
            sa += metrics::ssim(res.adv_pred, clr);
        }
        mpsnr = pa / val.count();
        mssim = sa / val.count();
    };

    for (AttackKind kind : kinds)
        for (float eps : eps_list) {
            double ap = 0.0, as = 0.0, bp = 0.0, bs = 0.0;
            mean_metrics(after, kind, eps, ap, as);
            mean_metrics(before, kind, eps, bp, bs);
            rows.push_back({attack_kind_letter(kind), eps, "psnr", ap, bp});
            rows.push_back({attack_kind_letter(kind), eps, "ssim", as, bs});
        }

    double cap = 0.0, cas = 0.0, cbp = 0.0, cbs = 0.0;
    for (int i = 0; i < val.count(); ++i) {
        const Tensor img = nth_image(val.hazy, i);
        const Tensor clr = nth_image(val.clear, i);
        const Tensor pa = predict(after, img);
        const Tensor pb = predict(before, img);
        cap += metrics::psnr_db(pa, clr);
        cas += metrics::ssim(pa, clr);
        cbp += metrics::psnr_db(pb, clr);
        cbs += metrics::ssim(pb, clr);
    }
    rows.push_back({"none", 0.0f, "psnr", cap / val.count(), cbp / val.count()});
    rows.push_back({"none", 0.0f, "ssim", cas / val.count(), cbs / val.count()});
    return rows;
}

std::string ab_rows_to_csv(const std::vector<AbRow>& rows) {
    Csv csv;
    csv.header = {"attack_kind", "epsilon", "metric", "after", "before"};
    for (const AbRow& r : rows)
        csv.rows.push_back({r.attack_kind, fmt_float(r.epsilon), r.metric, fmt_double(r.after),
                            fmt_double(r.before)});
    return csv.to_string();
}

}  // namespace hazekit
