#pragma once

#include <string>
#include <vector>

#include "hazekit/attack.h"
#include "hazekit/dataset.h"
#include "hazekit/model.h"

namespace hazekit {

// Min-max fine-tuning: per batch an inner sign-gradient attack crafts delta
// against the current student, then one SGD step descends
//   L = dist(student(I), J) + lambda * dist(student(I + delta), target)
// where target is the frozen teacher's prediction (PredTarget mode) or the
// ground truth (CleanTarget mode). The teacher is never updated.
enum class DefenseMode { PredTarget, CleanTarget };

const char* defense_mode_letter(DefenseMode m);  // P G
DefenseMode defense_mode_from_letter(const std::string& s);

struct DefenseConfig {
    DefenseMode mode = DefenseMode::PredTarget;
    float lambda = 1.0f;
    float epsilon = 8.0f / 255.0f;
    float alpha = 2.0f / 255.0f;
    std::vector<int> inner_steps = {10};  // one value, or a set sampled per batch
    AttackDistance distance = AttackDistance::Mse;
    int epochs = 40;
    float lr = 0.01f;
    int batch = 8;
    uint64_t seed = 7;
    int loss_window = 50;  // steps per averaged loss-curve point

    // stop after `patience` consecutive epochs whose attacked-validation
    // PSNR and SSIM both moved less than these deltas
    double stop_dpsnr = 0.05;
    double stop_dssim = 0.002;
    int stop_patience = 3;
    int val_attack_steps = 10;
};

struct DefenseOutcome {
    ModelParams params;
    std::vector<float> step_loss;
    std::vector<double> window_loss;           // mean over each loss_window steps
    std::vector<double> val_psnr, val_ssim;    // attacked validation, per epoch
    std::vector<double> val_clean_psnr;        // clean validation, per epoch
    int epochs_run = 0;
    bool early_stopped = false;
    uint64_t inner_gradient_passes = 0;
    bool teacher_frozen = true;
};

DefenseOutcome defend(const ModelParams& start, const ModelParams& teacher, const Dataset& train,
                      const Dataset& val, const DefenseConfig& cfg);

// Before/after table: every (kind, epsilon) cell attacks each checkpoint
// white-box with shared per-image seeds, then reports mean PSNR and SSIM
// rows plus two clean (unattacked) rows.
struct AbRow {
    std::string attack_kind;  // "none" for the clean rows
    float epsilon = 0.0f;
    std::string metric;  // "psnr" | "ssim"
    double after = 0.0, before = 0.0;
};

std::vector<AbRow> evaluate_defense(const ModelParams& before, const ModelParams& after,
                                    const Dataset& val, const std::vector<AttackKind>& kinds,
                                    const std::vector<float>& eps_list, int steps, uint64_t seed);

std::string ab_rows_to_csv(const std::vector<AbRow>& rows);

}  // namespace hazekit
