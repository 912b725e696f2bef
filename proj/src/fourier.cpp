#include "phaseref/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace phaseref {

namespace {

using cplx = std::complex<double>;

constexpr int kNaivePrimeLimit = 31; // direct O(p^2) DFT up to here, Bluestein beyond

int smallest_prime_factor(int n) {
    for (int p = 2; static_cast<long long>(p) * p <= n; ++p)
        if (n % p == 0) return p;
    return n;
}

int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

// In-place iterative radix-2 DIT; roots holds e^{-2*pi*i*k/m} for k < m.
void pow2_fft(cplx* a, int m, const std::vector<cplx>& roots) {
    for (int i = 1, j = 0; i < m; ++i) {
        int bit = m >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= m; len <<= 1) {
        const int half = len >> 1;
        const int step = m / len;
        for (int base = 0; base < m; base += len) {
            for (int k = 0; k < half; ++k) {
                const cplx w = roots[static_cast<size_t>(k) * step];
                const cplx u = a[base + k];
                const cplx v = a[base + k + half] * w;
                a[base + k] = u + v;
                a[base + k + half] = u - v;
            }
        }
    }
}

struct BluesteinData {
    int m = 0;                    // power-of-two convolution length >= 2n-1
    std::vector<cplx> chirp;      // e^{-i*pi*j^2/n}, j < n
    std::vector<cplx> filter_fft; // forward pow2 FFT of the symmetric chirp filter
    std::vector<cplx> roots_m;    // e^{-2*pi*i*k/m}
};

struct LengthData {
    std::vector<cplx> roots; // e^{-2*pi*i*k/n}
    int spf = 0;
    std::unique_ptr<BluesteinData> bluestein; // primes > kNaivePrimeLimit only
};

std::vector<cplx> forward_roots(int n) {
    std::vector<cplx> roots(n);
    for (int k = 0; k < n; ++k) {
        const double a = -2.0 * std::numbers::pi * k / n;
        roots[k] = cplx(std::cos(a), std::sin(a));
    }
    return roots;
}

std::unique_ptr<BluesteinData> make_bluestein(int n) {
    auto b = std::make_unique<BluesteinData>();
    b->m = next_pow2(2 * n - 1);
    b->roots_m = forward_roots(b->m);
    b->chirp.resize(n);
    for (int j = 0; j < n; ++j) {
        // j^2 mod 2n keeps the chirp argument small without changing its value.
        const long long jj = (static_cast<long long>(j) * j) % (2LL * n);
        const double a = -std::numbers::pi * static_cast<double>(jj) / n;
        b->chirp[j] = cplx(std::cos(a), std::sin(a));
    }
    std::vector<cplx> filter(b->m, cplx(0.0, 0.0));
    filter[0] = std::conj(b->chirp[0]);
    for (int j = 1; j < n; ++j) {
        filter[j] = std::conj(b->chirp[j]);
        filter[b->m - j] = filter[j];
    }
    pow2_fft(filter.data(), b->m, b->roots_m);
    b->filter_fft = std::move(filter);
    return b;
}

// out[k] = sum_j in[j*stride] * e^{-2*pi*i*j*k/n} via the chirp-z identity
// j*k = (j^2 + k^2 - (k-j)^2)/2, turning the DFT into one circular
// convolution of power-of-two length.
void bluestein_dft(const cplx* in, size_t stride, cplx* out, int n, const BluesteinData& b) {
    std::vector<cplx> a(b.m, cplx(0.0, 0.0));
    for (int j = 0; j < n; ++j) a[j] = in[j * stride] * b.chirp[j];
    pow2_fft(a.data(), b.m, b.roots_m);
    for (int k = 0; k < b.m; ++k) a[k] *= b.filter_fft[k];
    // unnormalized inverse = conj o forward o conj, then scale by 1/m
    for (auto& v : a) v = std::conj(v);
    pow2_fft(a.data(), b.m, b.roots_m);
    const double inv_m = 1.0 / b.m;
    for (int k = 0; k < n; ++k) out[k] = std::conj(a[k]) * inv_m * b.chirp[k];
}

using LengthTable = std::map<int, LengthData>; // every length on the factorization chain

// Recursive mixed-radix forward DFT. out must not alias in; arena provides
// n scratch slots shared across the whole recursion (a node only touches it
// after its children are done).
void fft_rec(const cplx* in, size_t stride, cplx* out, int n, const LengthTable& ks, cplx* arena);

void naive_prime_dft(const cplx* in, size_t stride, cplx* out, int p,
                     const std::vector<cplx>& roots) {
    for (int k = 0; k < p; ++k) {
        cplx acc = in[0];
        int idx = 0;
        for (int j = 1; j < p; ++j) {
            idx += k;
            if (idx >= p) idx -= p;
            acc += in[j * stride] * roots[idx];
        }
        out[k] = acc;
    }
}

void fft_rec(const cplx* in, size_t stride, cplx* out, int n, const LengthTable& ks, cplx* arena) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const LengthData& ld = ks.at(n);
    const int p = ld.spf;
    if (p == n) {
        if (ld.bluestein)
            bluestein_dft(in, stride, out, n, *ld.bluestein);
        else
            naive_prime_dft(in, stride, out, n, ld.roots);
        return;
    }
    const int q = n / p;
    for (int i = 0; i < p; ++i)
        fft_rec(in + static_cast<size_t>(i) * stride, stride * p, out + static_cast<size_t>(i) * q,
                q, ks, arena);
    // Combine the p interleaved length-q transforms:
    //   X[k1 + q*k2] = sum_i out[i*q + k1] * w_n^{i*(k1 + q*k2)}.
    for (int k1 = 0; k1 < q; ++k1) {
        for (int k2 = 0; k2 < p; ++k2) {
            const int k = k1 + q * k2;
            cplx acc = out[k1];
            int idx = 0;
            for (int i = 1; i < p; ++i) {
                idx += k;
                if (idx >= n) idx -= n;
                acc += out[static_cast<size_t>(i) * q + k1] * ld.roots[idx];
            }
            arena[k] = acc;
        }
    }
    std::copy(arena, arena + n, out);
}

} // namespace

struct FftPlan::Kernels {
    LengthTable lengths;
    int arena_size = 1;
};

FftPlan::FftPlan(int side) : side_(side) {
    if (side < 1)
        throw std::invalid_argument("FftPlan: side must be >= 1, got " + std::to_string(side));
    auto k = std::make_shared<Kernels>();
    k->arena_size = side;
    for (int m = side; m > 1;) {
        LengthData ld;
        ld.roots = forward_roots(m);
        ld.spf = smallest_prime_factor(m);
        const bool prime = ld.spf == m;
        if (prime && m > kNaivePrimeLimit) ld.bluestein = make_bluestein(m);
        const int next = prime ? 1 : m / ld.spf;
        k->lengths.emplace(m, std::move(ld));
        m = next;
    }
    kernels_ = std::move(k);
}

void FftPlan::forward_unnormalized(std::vector<cplx>& buf) const {
    const int d = side_;
    std::vector<cplx> line(d);
    std::vector<cplx> arena(kernels_->arena_size);
    for (int r = 0; r < d; ++r) {
        cplx* row = buf.data() + static_cast<size_t>(r) * d;
        fft_rec(row, 1, line.data(), d, kernels_->lengths, arena.data());
        std::copy(line.begin(), line.end(), row);
    }
    for (int c = 0; c < d; ++c) {
        fft_rec(buf.data() + c, d, line.data(), d, kernels_->lengths, arena.data());
        for (int r = 0; r < d; ++r) buf[static_cast<size_t>(r) * d + c] = line[r];
    }
}

Spectrum FftPlan::dft2(const Image& grid) const {
    if (grid.side != side_)
        throw std::invalid_argument("dft2: grid side " + std::to_string(grid.side) +
                                    " does not match plan side " + std::to_string(side_));
    std::vector<cplx> buf(grid.data.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = cplx(grid.data[i], 0.0);
    forward_unnormalized(buf);
    const double scale = 1.0 / side_;
    for (auto& v : buf) v *= scale;
    return Spectrum(side_, std::move(buf));
}

Spectrum FftPlan::idft2(const Spectrum& spec) const {
    if (spec.side != side_)
        throw std::invalid_argument("idft2: spectrum side " + std::to_string(spec.side) +
                                    " does not match plan side " + std::to_string(side_));
    // Unitary inverse via conj(forward(conj(x)))/D.
    std::vector<cplx> buf(spec.data.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = std::conj(spec.data[i]);
    forward_unnormalized(buf);
    const double scale = 1.0 / side_;
    for (auto& v : buf) v = std::conj(v) * scale;
    return Spectrum(side_, std::move(buf));
}

Spectrum::Spectrum(int side_, std::vector<std::complex<double>> data_)
    : side(side_), data(std::move(data_)) {
    if (side < 1)
        throw std::invalid_argument("Spectrum: side must be >= 1");
    if (data.size() != static_cast<size_t>(side) * side)
        throw std::invalid_argument("Spectrum: data length does not match side");
}

Image embed(const Image& img, int oversampling) {
    if (oversampling != 1 && oversampling != 2)
        throw std::invalid_argument("embed: oversampling must be 1 or 2, got " +
                                    std::to_string(oversampling));
    if (oversampling == 1) return img;
    const int d = img.side;
    const int big = oversampling * d;
    Image out(big, std::vector<double>(static_cast<size_t>(big) * big, 0.0));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out.at(r, c) = img.at(r, c);
    return out;
}

Image extract(const Image& grid, int d) {
    if (d < 1)
        throw std::invalid_argument("extract: d must be >= 1");
    if (grid.side % d != 0)
        throw std::invalid_argument("extract: grid side " + std::to_string(grid.side) +
                                    " not divisible by d = " + std::to_string(d));
    if (grid.side == d) return grid;
    Image out(d, std::vector<double>(static_cast<size_t>(d) * d));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out.at(r, c) = grid.at(r, c);
    return out;
}

} // namespace phaseref
