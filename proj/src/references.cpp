#include "phaseref/references.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace phaseref {

Image random_reference(int d, Rng& rng) {
    return random_uniform_image(d, rng);
}

Image random_binary_reference(int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("random_binary_reference: d must be >= 1");
    Image out(d, std::vector<double>(static_cast<size_t>(d) * d));
    for (double& v : out.data) v = rng.next_double() < 0.5 ? 1.0 : 0.0;
    return out;
}

namespace {

// Knuth's product method; one draw consumes a variable number of uniforms.
int poisson_knuth(Rng& rng, double lambda) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_double();
    } while (p > limit);
    return k - 1;
}

} // namespace

Image simple_reference(int d, const SimpleRefParams& params, Rng& rng) {
    if (d < 4)
        throw std::invalid_argument("simple_reference: d must be >= 4, got " + std::to_string(d));
    const int square = params.square_side >= 0 ? params.square_side : (d + 3) / 4;
    const double sigma = params.sigma >= 0.0 ? params.sigma : d / 10.0;
    if (square < 1 || square > d)
        throw std::invalid_argument("simple_reference: square_side must lie in [1, d]");
    if (!(sigma > 0.0)) throw std::invalid_argument("simple_reference: sigma must be > 0");
    if (!(params.noise_weight >= 0.0))
        throw std::invalid_argument("simple_reference: noise_weight must be >= 0");
    if (!(params.poisson_rate > 0.0))
        throw std::invalid_argument("simple_reference: poisson_rate must be > 0");
    if (!(params.threshold > 0.0 && params.threshold < 1.0))
        throw std::invalid_argument("simple_reference: threshold must lie in (0,1)");

    // White square whose bottom-right corner is pixel (d-1, d-1).
    Image img = image_new(d, 0.0);
    for (int r = d - square; r < d; ++r)
        for (int c = d - square; c < d; ++c) img.at(r, c) = 1.0;

    // Truncated Gaussian blur with zero padding outside the grid.
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int ksize = 2 * radius + 1;
    std::vector<double> kernel(static_cast<size_t>(ksize) * ksize);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i)
        for (int j = -radius; j <= radius; ++j) {
            const double w = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            kernel[static_cast<size_t>(i + radius) * ksize + (j + radius)] = w;
            ksum += w;
        }
    for (double& w : kernel) w /= ksum;

    Image blurred = image_new(d, 0.0);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int rr = r - i;
                if (rr < 0 || rr >= d) continue;
                for (int j = -radius; j <= radius; ++j) {
                    const int cc = c - j;
                    if (cc < 0 || cc >= d) continue;
                    acc += kernel[static_cast<size_t>(i + radius) * ksize + (j + radius)] *
                           img.at(rr, cc);
                }
            }
            blurred.at(r, c) = acc;
        }

    const double peak = *std::max_element(blurred.data.begin(), blurred.data.end());
    for (double& v : blurred.data) v /= peak;

    if (params.noise_weight > 0.0)
        for (double& v : blurred.data)
            v += params.noise_weight * poisson_knuth(rng, params.poisson_rate);

    for (double& v : blurred.data) v = v >= params.threshold ? 1.0 : 0.0;
    return blurred;
}

} // namespace phaseref
