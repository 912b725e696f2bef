#pragma once

#include <cstdint>
#include <vector>

#include "phaseref/core.hpp"

namespace phaseref {

/// Deterministic corpus of digit-glyph images in [0,1]: item i draws the
/// glyph for digit i mod 10 with seeded per-item jitter (translation,
/// rotation, scale, stroke width), rasterized with antialiased strokes on
/// a black background. Layout matches handwritten-digit datasets (white
/// strokes, ~28x28), so it exercises the same pipeline shape.
std::vector<Image> synthetic_digits(int count, int side, std::uint64_t seed);

} // namespace phaseref
