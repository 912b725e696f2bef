#pragma once

#include "phaseref/core.hpp"

namespace phaseref {

/// Knobs for the heuristic reference. Negative square_side / sigma mean
/// "derive from d": square_side = ceil(d/4), sigma = d/10.
struct SimpleRefParams {
    int square_side = -1;
    double sigma = -1.0;
    double noise_weight = 0.15; // w in the additive w * Poisson(lambda) term
    double poisson_rate = 1.0;
    double threshold = 0.5; // binarization cut, in (0,1)
};

/// i.i.d. uniform [0,1) pixels.
Image random_reference(int d, Rng& rng);

/// i.i.d. {0,1} pixels, each 1 with probability 1/2.
Image random_binary_reference(int d, Rng& rng);

/// Heuristic reference mimicking the learned ones: a white square in the
/// bottom-right corner, Gaussian-blurred (truncated kernel, radius
/// ceil(3*sigma), zero-padded borders), normalized to max 1, perturbed by
/// weighted per-pixel Poisson noise, then binarized. Output entries are
/// exactly 0 or 1. Requires d >= 4.
Image simple_reference(int d, const SimpleRefParams& params, Rng& rng);

} // namespace phaseref
