#pragma once

#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/fourier.hpp"

namespace phaseref {

/// Fourier magnitude measurement: a D x D grid of non-negative values with
/// D = oversampling * d. "No reference" conditions carry u = nullptr at the
/// API level; internally that means the zero image.
struct Measurement {
    int side = 0;
    int oversampling = 1;
    std::vector<double> data;

    Measurement() = default;
    Measurement(int side_, int oversampling_, std::vector<double> data_);

    double at(int r, int c) const { return data[static_cast<size_t>(r) * side + c]; }
    int signal_side() const { return side / oversampling; }
};

/// Forward model: y = |dft2(embed(x + u, s))| entrywise. x and u must share
/// one side and lie in [0,1]; pass u = nullptr to measure without a
/// reference.
Measurement measure(const Image& x, const Image* u, int oversampling);

/// (1/D^2) * sum of (|F(embed(x+u))| - y)^2; zero iff x reproduces the
/// measurement exactly. No range restriction on x, so solver iterates can
/// be scored directly.
double residual(const Image& x, const Image* u, const Measurement& y);

namespace detail {
/// Magnitudes of the oversampled transform of x+u without range checks;
/// shared by measure, residual and the solvers.
std::vector<double> forward_magnitudes(const FftPlan& plan, const Image& x, const Image* u,
                                       int oversampling);
} // namespace detail

} // namespace phaseref
