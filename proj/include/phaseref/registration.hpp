#pragma once

#include "phaseref/core.hpp"

namespace phaseref {

/// Circular shift: output[i][j] = input[(i-r) mod d][(j-c) mod d]. Any
/// integers are accepted and reduced mod d, so shifts compose additively.
Image shift(const Image& img, int r, int c);

/// 180-degree flip about the DFT origin: output[i][j] =
/// input[(-i) mod d][(-j) mod d]. An involution that preserves |dft2|.
Image flip180(const Image& img);

/// Best transform over the trivial-ambiguity group: both orientations
/// (identity, flip180) crossed with all d^2 circular shifts.
struct RegisterResult {
    enum class Orientation { kIdentity, kFlip };

    Image aligned;
    Orientation orientation = Orientation::kIdentity;
    int row_shift = 0;
    int col_shift = 0;
    double mse = 0.0;
};

/// Aligns recon to target, minimizing mse(shift(orient(recon), r, c),
/// target). The shift search per orientation runs as an FFT circular
/// cross-correlation whose argmax is verified by direct MSE evaluation;
/// the identity transform is always a candidate, so the returned MSE never
/// exceeds mse(recon, target). Ties break toward the lexicographically
/// smallest (orientation, r, c) with identity < flip.
RegisterResult register_image(const Image& recon, const Image& target);

} // namespace phaseref
