#include "phaseref/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phaseref {

Image::Image(int side_, std::vector<double> data_)
    : side(side_), data(std::move(data_)) {
    if (side < 1)
        throw std::invalid_argument("Image: side must be >= 1, got " + std::to_string(side));
    if (data.size() != static_cast<size_t>(side) * side)
        throw std::invalid_argument("Image: data length " + std::to_string(data.size()) +
                                    " does not match side " + std::to_string(side));
}

Image image_new(int side, double fill) {
    if (side < 1)
        throw std::invalid_argument("image_new: side must be >= 1, got " + std::to_string(side));
    if (!(fill >= 0.0 && fill <= 1.0))
        throw std::invalid_argument("image_new: fill must lie in [0,1], got " + std::to_string(fill));
    return Image(side, std::vector<double>(static_cast<size_t>(side) * side, fill));
}

Image clip01(const Image& img) {
    Image out = img;
    for (double& v : out.data) {
        if (!std::isfinite(v))
            throw std::invalid_argument("clip01: non-finite entry");
        v = std::min(1.0, std::max(0.0, v));
    }
    return out;
}

double mse(const Image& a, const Image& b) {
    if (a.side != b.side)
        throw std::invalid_argument("mse: side mismatch (" + std::to_string(a.side) + " vs " +
                                    std::to_string(b.side) + ")");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

bool all_finite(const Image& img) {
    for (double v : img.data)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// SplitMix64 output mix (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::derive(std::uint64_t stream_id) const {
    // Child seed mixes the parent seed with the stream id through two
    // rounds so nearby ids land far apart in state space.
    return Rng(mix64(seed_ ^ mix64(stream_id + 0x632BE59BD9B4E019ULL)));
}

Image random_uniform_image(int side, Rng& rng) {
    if (side < 1)
        throw std::invalid_argument("random_uniform_image: side must be >= 1");
    Image out(side, std::vector<double>(static_cast<size_t>(side) * side));
    for (double& v : out.data) v = rng.next_double();
    return out;
}

} // namespace phaseref
