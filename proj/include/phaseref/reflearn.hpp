#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/measurement.hpp"
#include "phaseref/reconstruct.hpp"

namespace phaseref {

/// Recorded intermediates of an n-step unrolled GS run, plus the inputs.
/// Holds exactly what the reverse pass consumes and what a bit-exact
/// forward replay needs.
struct UnrollTrace {
    Image x0;
    Image u;
    Measurement y;
    double epsilon = 1e-12;
    std::vector<detail::GsStepRecord> steps;
};

/// Distance of a trace from the two derivative kinks: the ReLU at zero
/// (per pre-activation) and the magnitude guard (per spectrum entry).
/// Gradient checks resample instances where either minimum is small.
struct KinkReport {
    double min_abs_pre_relu = 0.0;
    double min_spectrum_mag = 0.0;
};
KinkReport kink_report(const UnrollTrace& trace);

/// n GS iterations from x0 with full intermediate recording. The image
/// output is bit-identical to gs_run with the same inputs; n = 0 returns
/// x0 with an empty trace.
std::pair<Image, UnrollTrace> unrolled_forward(const Image& x0, const Image& u,
                                               const Measurement& y, int n,
                                               double epsilon = 1e-12);

/// Forward-only variant: mse(x_n, x_true) without keeping a trace.
double unrolled_loss(const Image& x_true, const Image& x0, const Image& u, const Measurement& y,
                     int n, double epsilon = 1e-12);

struct LossAndGrad {
    double loss = 0.0;
    Image grad_u;
};

/// Reverse-mode gradient of mse(x_n, x_true) with respect to the reference
/// u, with y held fixed. Local conventions at the kinks: the ReLU
/// derivative at exactly 0 is 0, and where the magnitude guard binds the
/// guarded magnitude is treated as the constant epsilon. The reference
/// contributes through the addition before each transform, the subtraction
/// after it, and recursively through the iterates; all three accumulate.
LossAndGrad loss_and_grad_u(const Image& x_true, const Image& x0, const Image& u,
                            const Measurement& y, int n, double epsilon = 1e-12);

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Per-pixel Adam moments for reference training.
struct AdamState {
    int side = 0;
    std::vector<double> m; // first moments
    std::vector<double> v; // second moments, >= 0
    long long t = 0;
    AdamConfig config;
};

AdamState adam_init(int side, const AdamConfig& config);

/// Standard bias-corrected Adam update followed by projection onto [0,1].
/// Mutates state (single writer), returns the updated reference.
Image adam_step(AdamState& state, const Image& u, const Image& grad);

struct TrainConfig {
    int unroll_steps = 15;
    int batch_size = 10;
    double learning_rate = 0.01;
    int max_batches = 50; // total Adam steps; 0 = no training
    std::uint64_t seed = 0;
    int oversampling = 2;
    double epsilon = 1e-12;
    int val_every = 1;          // validation cadence in Adam steps
    bool plateau_stop = false;  // optional early stop on stalled validation
    int plateau_patience = 10;  // evaluations without improvement before stopping
};

/// One history row per Adam step (plus a step-0 row holding the initial
/// validation error). val_mse is NaN on steps without an evaluation;
/// train_mse is NaN on the step-0 row.
struct TrainRecord {
    int step = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    Image reference;
    std::vector<TrainRecord> history;
    AdamState adam;
    std::string stop_reason; // "max_batches" or "plateau"
    int train_count = 0;
    int val_count = 0;
};

/// Learns a reference by stochastic gradient descent through the unrolled
/// solver. Each batch measures its images under the current reference,
/// averages the per-image reference gradients, and applies one Adam step
/// with projection onto [0,1]. The validation split is the last 10% of the
/// provided dataset. Deterministic given cfg.seed.
TrainResult train_reference(const std::vector<Image>& dataset, const TrainConfig& cfg);

struct GradCheckConfig {
    int trials = 50;
    std::vector<int> sides = {4, 6, 8};
    std::vector<int> unrolls = {1, 2, 3, 5};
    std::vector<int> oversamplings = {1, 2};
    std::uint64_t seed = 0;
    double fd_step = 1e-6;
    double kink_margin = 1e-6; // instances this close to a kink are redrawn
    double corrupt = 0.0;      // test hook: offset added to one analytic entry
};

struct GradCheckResult {
    int trials_run = 0;
    int resamples = 0;
    double max_rel_error = 0.0;
};

/// Compares loss_and_grad_u against central finite differences over seeded
/// random instances, cycling through the configured sides, unroll depths
/// and oversampling factors. Kink-adjacent instances are resampled and
/// counted, never compared.
GradCheckResult run_gradient_check(const GradCheckConfig& cfg);

} // namespace phaseref
