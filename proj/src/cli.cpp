#include "hazekit/cli.h"

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazekit/attack.h"
#include "hazekit/dataset.h"
#include "hazekit/defense.h"
#include "hazekit/error.h"
#include "hazekit/image.h"
#include "hazekit/kernels.h"
#include "hazekit/metrics.h"
#include "hazekit/model.h"
#include "hazekit/report.h"
#include "hazekit/rng.h"
#include "hazekit/synth.h"
#include "hazekit/util.h"

namespace hazekit {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs < 1) throw_config("--jobs must be at least 1");
    if (jobs == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(jobs, n);
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

namespace {

using nlohmann::ordered_json;

std::string hex64(uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string image_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "img%03d", i);
    return buf;
}

// Budgets are given as integer numerators over 255 (the natural unit for
// 8-bit imagery); --raw switches to plain floats in [0,1].
float parse_budget(const std::string& text, bool raw, const std::string& what) {
    try {
        size_t used = 0;
        if (raw) {
            const float v = std::stof(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            if (!(v >= 0.0f && v <= 1.0f)) throw_config(what + " must lie in [0,1], got " + text);
            return v;
        }
        const int num = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        if (num < 0 || num > 255) throw_config(what + " numerator must lie in [0,255], got " + text);
        return static_cast<float>(num) / 255.0f;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw_config(what + ": cannot parse '" + text + "'");
    }
}

std::vector<float> parse_budget_list(const std::string& text, bool raw, const std::string& what) {
    std::vector<float> out;
    for (const std::string& piece : split(text, ',')) out.push_back(parse_budget(piece, raw, what));
    if (out.empty()) throw_config(what + " needs at least one value");
    return out;
}

std::vector<int> parse_step_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (const std::string& piece : split(text, ',')) {
        try {
            size_t used = 0;
            const int v = std::stoi(piece, &used);
            if (used != piece.size()) throw std::invalid_argument(piece);
            if (v < 1) throw_config(what + " values must be >= 1, got " + piece);
            out.push_back(v);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw_config(what + ": cannot parse '" + piece + "'");
        }
    }
    if (out.empty()) throw_config(what + " needs at least one value");
    for (size_t i = 0; i < out.size(); ++i)
        for (size_t j = i + 1; j < out.size(); ++j)
            if (out[i] == out[j]) throw_config(what + " has duplicate value " + std::to_string(out[i]));
    return out;
}

// The manifest is always the last artifact written, so a directory with a
// manifest.json is a complete run by construction. No timestamps: reruns of
// the same command must be byte-identical.
void write_manifest(const std::string& out_dir, const ordered_json& man) {
    write_file_atomic(path_join(out_dir, "manifest.json"), man.dump(2) + "\n");
}

// ---------------------------------------------------------------- gen ----

struct GenOpts {
    std::string out;
    int count = 512;
    int size = 32;
    uint64_t seed = 1;
};

int cmd_gen(const GenOpts& o) {
    if (o.count < 1) throw_config("--count must be >= 1");
    if (o.size < 11) throw_config("--size must be >= 11 (structural metrics need an 11x11 window)");
    GenConfig cfg;
    cfg.count = o.count;
    cfg.size = o.size;
    cfg.seed = o.seed;
    const GenResult r = gen_dataset(cfg);

    ensure_dir(o.out);
    const std::string data_path = path_join(o.out, "data.hzds");
    save_dataset(data_path, r.data);

    ordered_json man;
    man["command"] = "gen";
    man["config"] = {{"count", o.count}, {"size", o.size}, {"seed", o.seed}};
    man["backend"] = kernels::backend_name(kernels::active_backend());
    man["data_hash"] = hex64(hash_file(data_path));
    ordered_json pairs = ordered_json::array();
    for (size_t i = 0; i < r.meta.size(); ++i) {
        const PairMeta& m = r.meta[i];
        pairs.push_back({{"index", i},
                         {"scene_seed", m.scene_seed},
                         {"objects", m.objects},
                         {"beta", m.beta},
                         {"airlight", {m.airlight[0], m.airlight[1], m.airlight[2]}}});
    }
    man["pairs"] = std::move(pairs);
    man["outputs"] = {"data.hzds"};
    write_manifest(o.out, man);
    std::cout << "gen: " << o.count << " pairs of " << o.size << "x" << o.size << " -> " << o.out
              << "\n";
    return 0;
}

// -------------------------------------------------------------- train ----

struct TrainOpts {
    std::string data, out;
    TrainConfig tc;
};

int cmd_train(const TrainOpts& o) {
    const Dataset ds = load_dataset(o.data);
    ModelParams params = ModelParams::random_init(substream_seed(o.tc.seed, "init"));
    const TrainStats stats = train_model(params, ds.hazy, ds.clear, o.tc);

    ensure_dir(o.out);
    const std::string ckpt = path_join(o.out, "checkpoint.hzck");
    save_checkpoint(ckpt, params);

    const int steps_per_epoch =
        (ds.count() + o.tc.batch - 1) / o.tc.batch;
    Csv loss;
    loss.header = {"step", "epoch", "loss"};
    for (size_t s = 0; s < stats.step_loss.size(); ++s)
        loss.rows.push_back({std::to_string(s), std::to_string(s / static_cast<size_t>(steps_per_epoch)),
                             fmt_float(stats.step_loss[s])});
    write_file_atomic(path_join(o.out, "train_loss.csv"), loss.to_string());

    ordered_json man;
    man["command"] = "train";
    man["config"] = {{"epochs", o.tc.epochs}, {"lr", o.tc.lr},     {"batch", o.tc.batch},
                     {"seed", o.tc.seed},     {"loss", o.tc.loss}};
    man["inputs"] = {{"data", o.data}, {"data_hash", hex64(hash_file(o.data))}};
    man["backend"] = kernels::backend_name(kernels::active_backend());
    man["pairs"] = ds.count();
    man["param_count"] = params.param_count();
    man["model_fingerprint"] = hex64(params.fingerprint());
    man["model_value_hash"] = hex64(params.value_hash());
    if (!stats.epoch_loss.empty()) {
        man["first_epoch_loss"] = stats.epoch_loss.front();
        man["final_epoch_loss"] = stats.epoch_loss.back();
    }
    man["outputs"] = {"checkpoint.hzck", "train_loss.csv"};
    write_manifest(o.out, man);
    std::cout << "train: " << o.tc.epochs << " epoch(s) on " << ds.count() << " pairs";
    if (!stats.epoch_loss.empty())
        std::cout << ", loss " << fmt_double(stats.epoch_loss.front()) << " -> "
                  << fmt_double(stats.epoch_loss.back());
    std::cout << " -> " << o.out << "\n";
    return 0;
}

// ------------------------------------------------------------- attack ----

struct AttackOpts {
    std::string model, data, out;
    std::string kind = "P", distance = "mse";
    std::string eps_list = "0,2,4,6,8", alpha = "2", steps_list = "10";
    uint64_t seed = 11;
    int limit = 0;
    bool raw = false;
    bool dump = false;
    int jobs = 1;
};

int cmd_attack(const AttackOpts& o) {
    const ModelParams model = load_checkpoint(o.model);
    const Dataset ds = load_dataset(o.data);
    const AttackKind kind = attack_kind_from_letter(o.kind);
    const AttackDistance dist = distance_from_name(o.distance);
    const std::vector<float> eps_list = parse_budget_list(o.eps_list, o.raw, "--eps");
    const float alpha = parse_budget(o.alpha, o.raw, "--alpha");
    const std::vector<int> steps_list = parse_step_list(o.steps_list, "--steps");
    if (o.limit < 0) throw_config("--limit must be >= 0");

    int n = ds.count();
    if (o.limit > 0 && o.limit < n) n = o.limit;
    if (n < 1) throw_config("dataset is empty");

    ensure_dir(o.out);
    if (o.dump) ensure_dir(path_join(o.out, "images"));

    struct PerImage {
        metrics::ImageMetrics out_m;
        double psnr_in = 0.0, ssim_in = 0.0;
        std::vector<float> trace;
        double coverage = 0.0;
        uint64_t passes = 0;
        bool ok = true;
    };

    std::vector<std::string> outputs;
    ordered_json aggregates = ordered_json::array();
    Csv trace_csv;
    trace_csv.header = {"id", "attack_kind", "epsilon", "steps", "step", "loss"};
    Csv ksweep;
    ksweep.header = {"steps", "epsilon", "mean_psnr_out", "mean_ssim_out"};
    int total_violations = 0;
    uint64_t total_passes = 0;

    for (size_t ki = 0; ki < steps_list.size(); ++ki) {
        metrics::MetricsReport rep;
        for (size_t ei = 0; ei < eps_list.size(); ++ei) {
            std::vector<PerImage> res(static_cast<size_t>(n));
            parallel_for(n, o.jobs, [&](int i) {
                const Tensor input = nth_image(ds.hazy, i);
                const Tensor clear = nth_image(ds.clear, i);
                AttackConfig cfg;
                cfg.kind = kind;
                cfg.distance = dist;
                cfg.epsilon = eps_list[ei];
                cfg.alpha = alpha;
                cfg.steps = steps_list[ki];
                cfg.seed = substream_seed(o.seed, "delta", static_cast<uint64_t>(i), ei, ki);
                const AttackResult ar = run_attack(model, input, cfg, &clear);

                PerImage& pi = res[static_cast<size_t>(i)];
                pi.out_m = metrics::compare(ar.adv_pred, clear);
                pi.psnr_in = metrics::psnr_db(ar.adv_input, input);
                pi.ssim_in = metrics::ssim(ar.adv_input, input);
                pi.trace = ar.loss_trace;
                pi.coverage = ar.mask_coverage;
                pi.passes = ar.gradient_passes;
                pi.ok = ar.budget_ok && ar.range_ok && ar.params_frozen;
                if (o.dump) {
                    if (ki == 0 && ei == 0)
                        write_ppm(path_join(o.out, "images/clean_" + image_id(i) + ".ppm"), input);
                    write_ppm(path_join(o.out, "images/adv_" + image_id(i) + "_k" +
                                                   std::to_string(steps_list[ki]) + "_e" +
                                                   std::to_string(ei) + ".ppm"),
                              ar.adv_input);
                }
            });

            double psnr_in = 0, psnr_out = 0, ssim_in = 0, ssim_out = 0, mse_out = 0, cov = 0;
            int violations = 0;
            uint64_t passes = 0;
            for (int i = 0; i < n; ++i) {
                const PerImage& pi = res[static_cast<size_t>(i)];
                rep.rows.push_back({image_id(i), eps_list[ei], attack_kind_letter(kind),
                                    pi.out_m.psnr, pi.out_m.ssim, pi.out_m.mse});
                psnr_in += pi.psnr_in;
                psnr_out += pi.out_m.psnr;
                ssim_in += pi.ssim_in;
                ssim_out += pi.out_m.ssim;
                mse_out += pi.out_m.mse;
                cov += pi.coverage;
                passes += pi.passes;
                if (!pi.ok) ++violations;
                for (size_t s = 0; s < pi.trace.size(); ++s)
                    trace_csv.rows.push_back({image_id(i), attack_kind_letter(kind),
                                              fmt_float(eps_list[ei]),
                                              std::to_string(steps_list[ki]), std::to_string(s),
                                              fmt_float(pi.trace[s])});
            }
            const double dn = static_cast<double>(n);
            ordered_json agg;
            agg["kind"] = attack_kind_letter(kind);
            agg["steps"] = steps_list[ki];
            agg["epsilon"] = static_cast<double>(eps_list[ei]);
            agg["mean_psnr_in"] = psnr_in / dn;
            agg["mean_psnr_out"] = psnr_out / dn;
            agg["mean_ssim_in"] = ssim_in / dn;
            agg["mean_ssim_out"] = ssim_out / dn;
            agg["mean_mse_out"] = mse_out / dn;
            if (kind == AttackKind::MaskedPred) agg["mean_mask_coverage"] = cov / dn;
            agg["violations"] = violations;
            agg["gradient_passes"] = passes;
            aggregates.push_back(std::move(agg));
            total_violations += violations;
            total_passes += passes;
            if (violations > 0)
                std::cerr << "warning: " << violations << " invariant violation(s) at eps="
                          << fmt_float(eps_list[ei]) << " steps=" << steps_list[ki] << "\n";
            ksweep.rows.push_back({std::to_string(steps_list[ki]), fmt_float(eps_list[ei]),
                                   fmt_double(psnr_out / dn), fmt_double(ssim_out / dn)});
        }
        const std::string metrics_name = steps_list.size() == 1
                                             ? std::string("metrics.csv")
                                             : "metrics_k" + std::to_string(steps_list[ki]) + ".csv";
        rep.write_csv(path_join(o.out, metrics_name));
        outputs.push_back(metrics_name);
    }

    write_file_atomic(path_join(o.out, "loss_trace.csv"), trace_csv.to_string());
    outputs.push_back("loss_trace.csv");
    if (steps_list.size() > 1) {
        write_file_atomic(path_join(o.out, "ksweep.csv"), ksweep.to_string());
        outputs.push_back("ksweep.csv");
    }

    ordered_json man;
    man["command"] = "attack";
    ordered_json cfg;
    cfg["kind"] = attack_kind_letter(kind);
    cfg["distance"] = distance_name(dist);
    cfg["epsilon"] = eps_list;
    cfg["alpha"] = alpha;
    cfg["steps"] = steps_list;
    cfg["seed"] = o.seed;
    cfg["limit"] = o.limit;
    cfg["raw"] = o.raw;
    cfg["dump_images"] = o.dump;
    cfg["jobs"] = o.jobs;
    man["config"] = std::move(cfg);
    man["inputs"] = {{"model", o.model},
                     {"model_hash", hex64(hash_file(o.model))},
                     {"model_fingerprint", hex64(model.fingerprint())},
                     {"data", o.data},
                     {"data_hash", hex64(hash_file(o.data))}};
    man["backend"] = kernels::backend_name(kernels::active_backend());
    man["images"] = n;
    man["aggregates"] = std::move(aggregates);
    man["violations"] = total_violations;
    man["gradient_passes"] = total_passes;
    man["outputs"] = outputs;
    write_manifest(o.out, man);
    std::cout << "attack: kind " << attack_kind_letter(kind) << " over " << n << " image(s), "
              << eps_list.size() << " budget(s), " << steps_list.size() << " step count(s) -> "
              << o.out << "\n";
    return 0;
}

// ------------------------------------------------------------- defend ----

struct DefendOpts {
    std::string model, data, out, teacher, val_data;
    std::string mode = "P", distance = "mse";
    float lambda = 1.0f;
    std::string eps = "8", alpha = "2", steps_list = "10";
    int epochs = 40, batch = 8, loss_window = 50;
    float lr = 0.01f;
    uint64_t seed = 7;
    bool raw = false, skip_eval = false;
};

int cmd_defend(const DefendOpts& o) {
    const ModelParams start = load_checkpoint(o.model);
    const ModelParams teacher = o.teacher.empty() ? start : load_checkpoint(o.teacher);
    if (teacher.fingerprint() != start.fingerprint())
        throw_config("teacher and student checkpoints have different architectures");

    const Dataset full = load_dataset(o.data);
    Dataset train, val;
    if (!o.val_data.empty()) {
        train = full;
        val = load_dataset(o.val_data);
        if (!(val.image_shape() == full.image_shape()))
            throw_config("--val-data image shape does not match the training data");
    } else {
        const int holdout = std::min(32, std::max(1, full.count() / 8));
        if (full.count() - holdout < 1)
            throw_config("dataset too small to hold out a validation split; pass --val-data");
        train.hazy = batch_slice(full.hazy, 0, full.count() - holdout);
        train.clear = batch_slice(full.clear, 0, full.count() - holdout);
        val.hazy = batch_slice(full.hazy, full.count() - holdout, full.count());
        val.clear = batch_slice(full.clear, full.count() - holdout, full.count());
    }

    DefenseConfig dc;
    dc.mode = defense_mode_from_letter(o.mode);
    dc.lambda = o.lambda;
    dc.epsilon = parse_budget(o.eps, o.raw, "--eps");
    dc.alpha = parse_budget(o.alpha, o.raw, "--alpha");
    dc.inner_steps = parse_step_list(o.steps_list, "--steps");
    dc.distance = distance_from_name(o.distance);
    dc.epochs = o.epochs;
    dc.lr = o.lr;
    dc.batch = o.batch;
    dc.seed = o.seed;
    dc.loss_window = o.loss_window;
    if (dc.lambda < 0.0f) throw_config("--lambda must be >= 0");
    if (dc.epochs < 1) throw_config("--epochs must be >= 1");
    if (dc.batch < 1) throw_config("--batch must be >= 1");
    if (dc.loss_window < 1) throw_config("--loss-window must be >= 1");

    const DefenseOutcome outcome = defend(start, teacher, train, val, dc);

    ensure_dir(o.out);
    std::vector<std::string> outputs;
    save_checkpoint(path_join(o.out, "defended.hzck"), outcome.params);
    outputs.push_back("defended.hzck");

    Csv loss;
    loss.header = {"window", "mean_loss"};
    for (size_t w = 0; w < outcome.window_loss.size(); ++w)
        loss.rows.push_back({std::to_string(w), fmt_double(outcome.window_loss[w])});
    write_file_atomic(path_join(o.out, "defense_loss.csv"), loss.to_string());
    outputs.push_back("defense_loss.csv");

    Csv curve;
    curve.header = {"epoch", "attacked_psnr", "attacked_ssim", "clean_psnr"};
    for (size_t e = 0; e < outcome.val_psnr.size(); ++e)
        curve.rows.push_back({std::to_string(e), fmt_double(outcome.val_psnr[e]),
                              fmt_double(outcome.val_ssim[e]), fmt_double(outcome.val_clean_psnr[e])});
    write_file_atomic(path_join(o.out, "val_curve.csv"), curve.to_string());
    outputs.push_back("val_curve.csv");

    double robust_gain_psnr = 0.0, clean_delta_psnr = 0.0;
    std::vector<AbRow> ab;
    if (!o.skip_eval) {
        const std::vector<float> ab_eps = {0.0f,           2.0f / 255.0f, 4.0f / 255.0f,
                                           6.0f / 255.0f, 8.0f / 255.0f};
        ab = evaluate_defense(start, outcome.params, val,
                              {AttackKind::PredTarget, AttackKind::CleanTarget}, ab_eps,
                              dc.val_attack_steps, substream_seed(o.seed, "ab"));
        write_file_atomic(path_join(o.out, "ab_report.csv"), ab_rows_to_csv(ab));
        outputs.push_back("ab_report.csv");
        int attacked_rows = 0;
        for (const AbRow& r : ab) {
            if (r.metric != "psnr") continue;
            if (r.attack_kind == "none") {
                clean_delta_psnr = r.after - r.before;
            } else {
                robust_gain_psnr += r.after - r.before;
                ++attacked_rows;
            }
        }
        if (attacked_rows > 0) robust_gain_psnr /= attacked_rows;
    }

    ordered_json man;
    man["command"] = "defend";
    ordered_json cfg;
    cfg["mode"] = defense_mode_letter(dc.mode);
    cfg["distance"] = distance_name(dc.distance);
    cfg["lambda"] = dc.lambda;
    cfg["epsilon"] = dc.epsilon;
    cfg["alpha"] = dc.alpha;
    cfg["steps"] = dc.inner_steps;
    cfg["epochs"] = dc.epochs;
    cfg["lr"] = dc.lr;
    cfg["batch"] = dc.batch;
    cfg["seed"] = dc.seed;
    cfg["loss_window"] = dc.loss_window;
    cfg["raw"] = o.raw;
    cfg["skip_eval"] = o.skip_eval;
    man["config"] = std::move(cfg);
    man["inputs"] = {{"model", o.model},
                     {"model_hash", hex64(hash_file(o.model))},
                     {"teacher", o.teacher.empty() ? o.model : o.teacher},
                     {"teacher_value_hash", hex64(teacher.value_hash())},
                     {"data", o.data},
                     {"data_hash", hex64(hash_file(o.data))},
                     {"val_data", o.val_data}};
    man["backend"] = kernels::backend_name(kernels::active_backend());
    man["train_pairs"] = train.count();
    man["val_pairs"] = val.count();
    man["epochs_run"] = outcome.epochs_run;
    man["early_stopped"] = outcome.early_stopped;
    man["teacher_frozen"] = outcome.teacher_frozen;
    man["inner_gradient_passes"] = outcome.inner_gradient_passes;
    man["final_attacked_psnr"] = outcome.val_psnr.back();
    man["final_attacked_ssim"] = outcome.val_ssim.back();
    man["final_clean_psnr"] = outcome.val_clean_psnr.back();
    if (!o.skip_eval) {
        man["robust_gain_psnr"] = robust_gain_psnr;
        man["clean_delta_psnr"] = clean_delta_psnr;
    }
    man["defended_value_hash"] = hex64(outcome.params.value_hash());
    man["outputs"] = outputs;
    write_manifest(o.out, man);
    std::cout << "defend: mode " << defense_mode_letter(dc.mode) << ", " << outcome.epochs_run
              << "/" << dc.epochs << " epoch(s)" << (outcome.early_stopped ? " (early stop)" : "")
              << ", attacked val PSNR " << fmt_double(outcome.val_psnr.back()) << " dB -> " << o.out
              << "\n";
    return 0;
}

// ------------------------------------------------------------- report ----

struct ReportOpts {
    std::string out;
    std::vector<std::string> runs;
};

int cmd_report(const ReportOpts& o) {
    const std::vector<std::string> written = build_report(o.runs, o.out);

    ordered_json man;
    man["command"] = "report";
    ordered_json inputs = ordered_json::array();
    for (const std::string& dir : o.runs)
        inputs.push_back({{"run", dir},
                          {"manifest_hash", hex64(hash_file(path_join(dir, "manifest.json")))}});
    man["inputs"] = std::move(inputs);
    man["backend"] = kernels::backend_name(kernels::active_backend());
    man["outputs"] = written;
    write_manifest(o.out, man);
    std::cout << "report: merged " << o.runs.size() << " run(s) -> " << o.out << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"adversarial attack & defense workbench for a small dehazing network"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; [section] names match subcommands");

    GenOpts gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "synthesize a paired hazy/clear dataset");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--count", gen.count, "number of image pairs");
    gen_cmd->add_option("--size", gen.size, "square image side in pixels");
    gen_cmd->add_option("--seed", gen.seed, "master seed");

    TrainOpts train;
    CLI::App* train_cmd = app.add_subcommand("train", "train the dehazing model");
    train_cmd->add_option("--data", train.data, "dataset file (.hzds)")->required();
    train_cmd->add_option("--out", train.out, "output directory")->required();
    train_cmd->add_option("--epochs", train.tc.epochs, "training epochs");
    train_cmd->add_option("--lr", train.tc.lr, "SGD learning rate");
    train_cmd->add_option("--batch", train.tc.batch, "batch size");
    train_cmd->add_option("--seed", train.tc.seed, "master seed");
    train_cmd->add_option("--loss", train.tc.loss, "training loss")
        ->check(CLI::IsMember({"mse", "dssim"}));

    AttackOpts atk;
    CLI::App* attack_cmd = app.add_subcommand("attack", "run a perturbation sweep against a checkpoint");
    attack_cmd->add_option("--model", atk.model, "checkpoint file (.hzck)")->required();
    attack_cmd->add_option("--data", atk.data, "dataset file (.hzds)")->required();
    attack_cmd->add_option("--out", atk.out, "output directory")->required();
    attack_cmd->add_option("--kind", atk.kind, "attack kind: P, M, G, I or N")
        ->check(CLI::IsMember({"P", "M", "G", "I", "N"}));
    attack_cmd->add_option("--distance", atk.distance, "objective distance")
        ->check(CLI::IsMember({"mse", "ssim"}));
    attack_cmd->add_option("--eps-list,--eps", atk.eps_list, "comma list of budgets (numerators over 255)");
    attack_cmd->add_option("--alpha", atk.alpha, "step size (numerator over 255)");
    attack_cmd->add_option("--steps", atk.steps_list, "comma list of iteration counts");
    attack_cmd->add_option("--seed", atk.seed, "master seed");
    attack_cmd->add_option("--limit", atk.limit, "attack only the first N pairs (0 = all)");
    attack_cmd->add_flag("--raw", atk.raw, "budgets are raw floats in [0,1]");
    attack_cmd->add_flag("--dump-images", atk.dump, "write clean/adversarial inputs as PPM");
    attack_cmd->add_option("--jobs", atk.jobs, "worker threads (never affects results)");

    DefendOpts def;
    CLI::App* defend_cmd = app.add_subcommand("defend", "adversarially fine-tune a checkpoint");
    defend_cmd->add_option("--model", def.model, "student checkpoint (.hzck)")->required();
    defend_cmd->add_option("--data", def.data, "dataset file (.hzds)")->required();
    defend_cmd->add_option("--out", def.out, "output directory")->required();
    defend_cmd->add_option("--mode", def.mode, "inner-attack target: P (teacher) or G (truth)")
        ->check(CLI::IsMember({"P", "G"}));
    defend_cmd->add_option("--teacher", def.teacher, "teacher checkpoint (defaults to --model)");
    defend_cmd->add_option("--val-data", def.val_data,
                           "validation dataset (default: hold out the tail of --data)");
    defend_cmd->add_option("--lambda", def.lambda, "adversarial loss weight");
    defend_cmd->add_option("--eps", def.eps, "inner-attack budget (numerator over 255)");
    defend_cmd->add_option("--alpha", def.alpha, "inner-attack step size (numerator over 255)");
    defend_cmd->add_option("--steps", def.steps_list, "inner iteration count, or a comma set sampled per batch");
    defend_cmd->add_option("--epochs", def.epochs, "max fine-tuning epochs");
    defend_cmd->add_option("--lr", def.lr, "SGD learning rate");
    defend_cmd->add_option("--batch", def.batch, "batch size");
    defend_cmd->add_option("--seed", def.seed, "master seed");
    defend_cmd->add_option("--loss-window", def.loss_window, "steps per averaged loss-curve point");
    defend_cmd->add_option("--distance", def.distance, "objective distance")
        ->check(CLI::IsMember({"mse", "ssim"}));
    defend_cmd->add_flag("--raw", def.raw, "budgets are raw floats in [0,1]");
    defend_cmd->add_flag("--skip-eval", def.skip_eval, "skip the before/after attack table");

    ReportOpts rep;
    CLI::App* report_cmd = app.add_subcommand("report", "merge attack runs into comparison tables");
    report_cmd->add_option("--out", rep.out, "output directory")->required();
    report_cmd->add_option("--runs,runs", rep.runs, "attack run directories")->required()->expected(-1);

    try {
        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("hazekit");
        for (const std::string& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(gen_cmd)) return cmd_gen(gen);
        if (app.got_subcommand(train_cmd)) return cmd_train(train);
        if (app.got_subcommand(attack_cmd)) return cmd_attack(atk);
        if (app.got_subcommand(defend_cmd)) return cmd_defend(def);
        if (app.got_subcommand(report_cmd)) return cmd_report(rep);
        std::cerr << app.help();
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == Error::Kind::Config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hazekit
