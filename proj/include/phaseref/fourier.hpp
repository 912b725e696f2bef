#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "phaseref/core.hpp"

namespace phaseref {

/// Square grid of complex values, row-major. Used for DFT outputs and for
/// the complex grid returned by the inverse transform.
struct Spectrum {
    int side = 0;
    std::vector<std::complex<double>> data;

    Spectrum() = default;
    Spectrum(int side_, std::vector<std::complex<double>> data_);

    std::complex<double>& at(int r, int c) { return data[static_cast<size_t>(r) * side + c]; }
    const std::complex<double>& at(int r, int c) const {
        return data[static_cast<size_t>(r) * side + c];
    }
};

/// Precomputed transform state for one grid side D. The transform is the
/// unitary 2D DFT,
///     X[k,l] = (1/D) * sum_{m,n} x[m,n] * exp(-2*pi*i*(k*m + l*n)/D),
/// so the inverse equals the adjoint and a forward/inverse round trip is
/// the identity. Any side >= 1 is supported: composite lengths run
/// mixed-radix Cooley-Tukey, small primes a direct DFT, and primes above
/// 31 Bluestein's chirp-z over a power-of-two convolution.
///
/// Plans are immutable after construction and safe to share across threads.
class FftPlan {
public:
    explicit FftPlan(int side);

    int side() const { return side_; }

    /// Unitary forward transform of a real D x D grid.
    Spectrum dft2(const Image& grid) const;

    /// Unitary inverse; idft2(dft2(x)) reproduces x to ~1e-15 max-abs.
    Spectrum idft2(const Spectrum& spec) const;

private:
    struct Kernels;

    void forward_unnormalized(std::vector<std::complex<double>>& buf) const;

    int side_;
    std::shared_ptr<const Kernels> kernels_;
};

/// Copies img into rows/cols [0,d) of an (s*d) x (s*d) zero grid. s = 1 is
/// the identity. Oversampling by s = 2 doubles the measured grid in each
/// dimension.
Image embed(const Image& img, int oversampling);

/// Top-left d x d block; the adjoint of embed, and extract(embed(x,s),d) = x.
Image extract(const Image& grid, int d);

} // namespace phaseref
