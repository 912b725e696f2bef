#include "phaseref/measurement.hpp"

#include <cmath>
#include <string>

namespace phaseref {

Measurement::Measurement(int side_, int oversampling_, std::vector<double> data_)
    : side(side_), oversampling(oversampling_), data(std::move(data_)) {
    if (oversampling != 1 && oversampling != 2)
        throw std::invalid_argument("Measurement: oversampling must be 1 or 2");
    if (side < 1 || side % oversampling != 0)
        throw std::invalid_argument("Measurement: side must be a positive multiple of the "
                                    "oversampling factor");
    if (data.size() != static_cast<size_t>(side) * side)
        throw std::invalid_argument("Measurement: data length does not match side");
    for (double v : data)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("Measurement: entries must be finite and >= 0");
}

namespace detail {

std::vector<double> forward_magnitudes(const FftPlan& plan, const Image& x, const Image* u,
                                       int oversampling) {
    Image sum = x;
    if (u) {
        if (u->side != x.side)
            throw std::invalid_argument("forward_magnitudes: reference side " +
                                        std::to_string(u->side) + " does not match image side " +
                                        std::to_string(x.side));
        for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += u->data[i];
    }
    const Spectrum spec = plan.dft2(embed(sum, oversampling));
    std::vector<double> mags(spec.data.size());
    for (size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(spec.data[i]);
    return mags;
}

} // namespace detail

namespace {

void check_unit_range(const Image& img, const char* what) {
    for (double v : img.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(std::string(what) + " entries must lie in [0,1]");
}

} // namespace

Measurement measure(const Image& x, const Image* u, int oversampling) {
    check_unit_range(x, "measure: image");
    if (u) check_unit_range(*u, "measure: reference");
    const int big = x.side * oversampling;
    FftPlan plan(big);
    return Measurement(big, oversampling, detail::forward_magnitudes(plan, x, u, oversampling));
}

double residual(const Image& x, const Image* u, const Measurement& y) {
    if (x.side * y.oversampling != y.side)
        throw std::invalid_argument("residual: image side " + std::to_string(x.side) +
                                    " incompatible with measurement side " +
                                    std::to_string(y.side) + " at oversampling " +
                                    std::to_string(y.oversampling));
    FftPlan plan(y.side);
    const std::vector<double> mags = detail::forward_magnitudes(plan, x, u, y.oversampling);
    double acc = 0.0;
    for (size_t i = 0; i < mags.size(); ++i) {
        const double d = mags[i] - y.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(mags.size());
}

} // namespace phaseref
