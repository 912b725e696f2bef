#include "phaseref/registration.hpp"

#include <cmath>
#include <string>

#include "phaseref/fourier.hpp"

namespace phaseref {

namespace {

int mod(int a, int d) {
    const int m = a % d;
    return m < 0 ? m + d : m;
}

} // namespace

Image shift(const Image& img, int r, int c) {
    const int d = img.side;
    Image out(d, std::vector<double>(img.data.size()));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.at(i, j) = img.at(mod(i - r, d), mod(j - c, d));
    return out;
}

Image flip180(const Image& img) {
    const int d = img.side;
    Image out(d, std::vector<double>(img.data.size()));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.at(i, j) = img.at((d - i) % d, (d - j) % d);
    return out;
}

namespace {

struct Candidate {
    RegisterResult::Orientation orientation;
    int r, c;
    double mse;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.mse != b.mse) return a.mse < b.mse;
    if (a.orientation != b.orientation)
        return a.orientation == RegisterResult::Orientation::kIdentity;
    if (a.r != b.r) return a.r < b.r;
    return a.c < b.c;
}

// Argmax over (r,c) of the circular cross-correlation
//   C[r,c] = sum_{i,j} oriented[(i-r) mod d][(j-c) mod d] * target[i][j],
// which for fixed norms is the argmin of the shifted MSE. With the unitary
// transform, C = Re(idft2(d * conj(dft2(oriented)) .* dft2(target))).
std::pair<int, int> correlation_argmax(const FftPlan& plan, const Image& oriented,
                                       const Image& target) {
    const int d = oriented.side;
    const Spectrum fr = plan.dft2(oriented);
    const Spectrum ft = plan.dft2(target);
    Spectrum prod(d, std::vector<std::complex<double>>(fr.data.size()));
    for (size_t i = 0; i < fr.data.size(); ++i)
        prod.data[i] = static_cast<double>(d) * std::conj(fr.data[i]) * ft.data[i];
    const Spectrum corr = plan.idft2(prod);
    int best_r = 0, best_c = 0;
    double best = corr.at(0, 0).real();
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            const double v = corr.at(r, c).real();
            if (v > best) {
                best = v;
                best_r = r;
                best_c = c;
            }
        }
    return {best_r, best_c};
}

} // namespace

RegisterResult register_image(const Image& recon, const Image& target) {
    if (recon.side != target.side)
        throw std::invalid_argument("register_image: side mismatch (" +
                                    std::to_string(recon.side) + " vs " +
                                    std::to_string(target.side) + ")");
    const FftPlan plan(recon.side);
    const Image flipped = flip180(recon);

    const auto [ir, ic] = correlation_argmax(plan, recon, target);
    const auto [fr, fc] = correlation_argmax(plan, flipped, target);

    // Direct MSE at each correlation argmax verifies the FFT route; the
    // identity candidate keeps the result no worse than no registration.
    Candidate candidates[] = {
        {RegisterResult::Orientation::kIdentity, ir, ic,
         mse(shift(recon, ir, ic), target)},
        {RegisterResult::Orientation::kIdentity, 0, 0, mse(recon, target)},
        {RegisterResult::Orientation::kFlip, fr, fc, mse(shift(flipped, fr, fc), target)},
    };
    Candidate best = candidates[0];
    for (const Candidate& cand : candidates)
        if (better(cand, best)) best = cand;

    RegisterResult result;
    result.orientation = best.orientation;
    result.row_shift = best.r;
    result.col_shift = best.c;
    result.mse = best.mse;
    const Image& oriented =
        best.orientation == RegisterResult::Orientation::kIdentity ? recon : flipped;
    result.aligned = shift(oriented, best.r, best.c);
    return result;
}

} // namespace phaseref
