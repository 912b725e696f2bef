#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace phaseref {

/// Square grid of real intensities, row-major, origin at the top-left.
/// Signals and references live in [0,1]; solver intermediates may exceed 1
/// but stay non-negative after the image-constraint step.
struct Image {
    int side = 0;
    std::vector<double> data;

    Image() = default;
    Image(int side_, std::vector<double> data_);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * side + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * side + c]; }
    int pixel_count() const { return side * side; }
};

/// Constant image with every pixel equal to fill. Rejects side < 1 and
/// fill outside [0,1].
Image image_new(int side, double fill);

/// Entrywise min(1, max(0, v)). Idempotent. Rejects non-finite entries.
Image clip01(const Image& img);

/// (1/d^2) * sum of squared differences. Rejects mismatched sides.
double mse(const Image& a, const Image& b);

bool all_finite(const Image& img);

/// Counter-based deterministic generator (SplitMix64). Output i is a fixed
/// 64-bit mix of seed + i*0x9E3779B97F4A7C15, so a stream is fully
/// determined by its seed on every platform and can be replayed from any
/// point by restoring the counter.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();

    /// Uniform in [0,1) with 53 random mantissa bits.
    double next_double();

    /// Independent child stream; children with distinct ids never collide
    /// with each other or with the parent for any practical draw count.
    Rng derive(std::uint64_t stream_id) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

/// d x d image with i.i.d. uniform [0,1) pixels drawn row-major from rng.
Image random_uniform_image(int side, Rng& rng);

} // namespace phaseref
