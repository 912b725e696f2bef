#include "phaseref/reconstruct.hpp"

#include <cmath>
#include <string>

namespace phaseref {

namespace {

void check_gs_config(const GsConfig& cfg) {
    if (cfg.iterations < 1)
        throw std::invalid_argument("GsConfig: iterations must be >= 1");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-6))
        throw std::invalid_argument("GsConfig: epsilon must lie in (0, 1e-6]");
    if (cfg.oversampling != 1 && cfg.oversampling != 2)
        throw std::invalid_argument("GsConfig: oversampling must be 1 or 2");
}

void check_gd_config(const GdConfig& cfg) {
    if (cfg.iterations < 1)
        throw std::invalid_argument("GdConfig: iterations must be >= 1");
    if (!(cfg.step_size > 0.0))
        throw std::invalid_argument("GdConfig: step_size must be > 0");
    if (cfg.oversampling != 1 && cfg.oversampling != 2)
        throw std::invalid_argument("GdConfig: oversampling must be 1 or 2");
}

void check_sides(const Image& x, const Image* u, const Measurement& y, int oversampling) {
    if (oversampling != y.oversampling)
        throw std::invalid_argument("solver: config oversampling " + std::to_string(oversampling) +
                                    " does not match measurement oversampling " +
                                    std::to_string(y.oversampling));
    if (x.side * oversampling != y.side)
        throw std::invalid_argument("solver: image side " + std::to_string(x.side) +
                                    " incompatible with measurement side " +
                                    std::to_string(y.side));
    if (u && u->side != x.side)
        throw std::invalid_argument("solver: reference side does not match image side");
}

} // namespace

namespace detail {

Image gs_step_kernel(const FftPlan& plan, const Image& x, const Image* u, const Measurement& y,
                     double epsilon, GsStepRecord* record) {
    const int d = x.side;
    const int big = y.side;

    Image sum = x;
    if (u)
        for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += u->data[i];

    Spectrum z = plan.dft2(embed(sum, y.oversampling));

    std::vector<double> guarded(z.data.size());
    Spectrum phase(big, std::vector<std::complex<double>>(z.data.size()));
    for (size_t i = 0; i < z.data.size(); ++i) {
        const double mag = std::abs(z.data[i]);
        const double m = mag > epsilon ? mag : epsilon;
        guarded[i] = m;
        phase.data[i] = z.data[i] / m;
    }

    Spectrum constrained(big, std::vector<std::complex<double>>(z.data.size()));
    for (size_t i = 0; i < z.data.size(); ++i) constrained.data[i] = phase.data[i] * y.data[i];
    const Spectrum w = plan.idft2(constrained);

    Image pre_relu(d, std::vector<double>(static_cast<size_t>(d) * d));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            pre_relu.at(r, c) = w.at(r, c).real() - (u ? u->at(r, c) : 0.0);
    if (!all_finite(pre_relu))
        throw std::runtime_error("gs_step: non-finite intermediate (check the epsilon guard)");

    Image out(d, std::vector<double>(pre_relu.data.size()));
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = pre_relu.data[i] > 0.0 ? pre_relu.data[i] : 0.0;

    if (record) {
        record->z = std::move(z);
        record->guarded_mag = std::move(guarded);
        record->phase = std::move(phase);
        record->pre_relu = std::move(pre_relu);
    }
    return out;
}

double amplitude_flow_gradient(const FftPlan& plan, const Image& x, const Image* u,
                               const Measurement& y, double epsilon, Image* grad_out) {
    const int d = x.side;

    Image sum = x;
    if (u)
        for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += u->data[i];
    const Spectrum z = plan.dft2(embed(sum, y.oversampling));

    double loss = 0.0;
    Spectrum gz(y.side, std::vector<std::complex<double>>(z.data.size()));
    for (size_t i = 0; i < z.data.size(); ++i) {
        const double mag = std::abs(z.data[i]);
        const double m = mag > epsilon ? mag : epsilon;
        const double diff = m - y.data[i];
        loss += 0.5 * diff * diff;
        gz.data[i] = mag > epsilon ? z.data[i] * (diff / m) : 0.0;
    }
    if (grad_out) {
        const Spectrum ge = plan.idft2(gz);
        Image grad(d, std::vector<double>(static_cast<size_t>(d) * d));
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) grad.at(r, c) = ge.at(r, c).real();
        *grad_out = std::move(grad);
    }
    return loss;
}

Image initial_image(int side, InitMode mode, std::uint64_t seed) {
    if (mode == InitMode::kZeros) return image_new(side, 0.0);
    Rng rng(seed);
    return random_uniform_image(side, rng);
}

} // namespace detail

Image gs_step(const Image& x, const Image* u, const Measurement& y, const GsConfig& cfg) {
    check_gs_config(cfg);
    check_sides(x, u, y, cfg.oversampling);
    const FftPlan plan(y.side);
    return detail::gs_step_kernel(plan, x, u, y, cfg.epsilon, nullptr);
}

Image gs_run(const Measurement& y, const Image* u, const GsConfig& cfg) {
    check_gs_config(cfg);
    const int d = y.signal_side();
    Image x = detail::initial_image(d, cfg.init, cfg.init_seed);
    check_sides(x, u, y, cfg.oversampling);
    const FftPlan plan(y.side);
    for (int k = 0; k < cfg.iterations; ++k)
        x = detail::gs_step_kernel(plan, x, u, y, cfg.epsilon, nullptr);
    return x;
}

Image gd_run(const Measurement& y, const Image* u, const GdConfig& cfg) {
    check_gd_config(cfg);
    const int d = y.signal_side();
    Image x = detail::initial_image(d, cfg.init, cfg.init_seed);
    check_sides(x, u, y, cfg.oversampling);
    const FftPlan plan(y.side);
    const double cells = static_cast<double>(y.data.size());

    // Same epsilon guard as the GS path; the loss surface is identical to
    // the residual diagnostic up to the factor 2/D^2.
    const double epsilon = 1e-12;
    for (int k = 0; k < cfg.iterations; ++k) {
        Image grad;
        const double loss = detail::amplitude_flow_gradient(plan, x, u, y, epsilon, &grad);
        const double res = 2.0 * loss / cells;
        if (res > 1e6)
            throw std::runtime_error("gd_run: diverged at iteration " + std::to_string(k) +
                                     " (residual " + std::to_string(res) +
                                     " exceeds 1e6); reduce step_size");
        for (size_t i = 0; i < x.data.size(); ++i) {
            const double v = x.data[i] - cfg.step_size * grad.data[i];
            x.data[i] = v > 0.0 ? v : 0.0;
        }
        if (!all_finite(x))
            throw std::runtime_error("gd_run: non-finite iterate at iteration " +
                                     std::to_string(k));
    }
    return x;
}

} // namespace phaseref
