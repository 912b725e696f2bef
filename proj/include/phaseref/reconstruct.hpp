#pragma once

#include <cstdint>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/fourier.hpp"
#include "phaseref/measurement.hpp"

namespace phaseref {

enum class InitMode { kZeros, kUniformRandom };

/// Gerchberg-Saxton solver configuration. epsilon guards the magnitude
/// division in the phase estimate; it must stay tiny (at most 1e-6) or the
/// phase map stops being a projection in any useful sense.
struct GsConfig {
    int iterations = 500;
    double epsilon = 1e-12;
    int oversampling = 1;
    InitMode init = InitMode::kUniformRandom;
    std::uint64_t init_seed = 0;
};

/// Amplitude-loss gradient descent configuration (the test-time baseline
/// solver). step_size 1.95 follows the evaluation protocol default.
struct GdConfig {
    int iterations = 500;
    double step_size = 1.95;
    int oversampling = 1;
    InitMode init = InitMode::kUniformRandom;
    std::uint64_t init_seed = 0;
};

namespace detail {

/// Intermediates of one GS iteration, enough to replay it bit-exactly and
/// to drive the reverse (gradient) pass.
struct GsStepRecord {
    Spectrum z;                      // spectrum of the embedded x + u, pre-guard
    std::vector<double> guarded_mag; // max(|z|, epsilon)
    Spectrum phase;                  // z / guarded_mag
    Image pre_relu;                  // extracted real block minus u
};

/// One GS iteration against an existing plan; records intermediates when
/// record is non-null. gs_step, gs_run and the unrolled trainer all funnel
/// through here, which is what makes their outputs bit-identical.
Image gs_step_kernel(const FftPlan& plan, const Image& x, const Image* u, const Measurement& y,
                     double epsilon, GsStepRecord* record);

/// Loss 0.5 * sum((max(|F(embed(x+u))|, epsilon) - y)^2) and its gradient
/// with respect to x. Where the guard binds the magnitude is treated as the
/// constant epsilon, so the gradient contribution is zero there.
double amplitude_flow_gradient(const FftPlan& plan, const Image& x, const Image* u,
                               const Measurement& y, double epsilon, Image* grad_out);

Image initial_image(int side, InitMode mode, std::uint64_t seed);

} // namespace detail

/// One Gerchberg-Saxton iteration: estimate the phase of F(embed(x+u)),
/// impose the measured magnitudes, invert, subtract the reference on the
/// support, and clamp to non-negative values.
Image gs_step(const Image& x, const Image* u, const Measurement& y, const GsConfig& cfg);

/// cfg.iterations GS iterations from the configured initialization.
/// Deterministic given cfg (including the init seed).
Image gs_run(const Measurement& y, const Image* u, const GsConfig& cfg);

/// Projected gradient descent on the amplitude loss:
/// x <- max(0, x - alpha * grad). Aborts with a diagnostic if the residual
/// exceeds 1e6.
Image gd_run(const Measurement& y, const Image* u, const GdConfig& cfg);

} // namespace phaseref
