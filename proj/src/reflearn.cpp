#include "phaseref/reflearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace phaseref {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_unroll_inputs(const Image& x0, const Image& u, const Measurement& y, int n) {
    if (n < 0) throw std::invalid_argument("unrolled_forward: n must be >= 0");
    if (u.side != x0.side)
        throw std::invalid_argument("unrolled_forward: reference side does not match x0 side");
    if (x0.side * y.oversampling != y.side)
        throw std::invalid_argument("unrolled_forward: x0 side " + std::to_string(x0.side) +
                                    " incompatible with measurement side " +
                                    std::to_string(y.side));
}

} // namespace

std::pair<Image, UnrollTrace> unrolled_forward(const Image& x0, const Image& u,
                                               const Measurement& y, int n, double epsilon) {
    check_unroll_inputs(x0, u, y, n);
    UnrollTrace trace;
    trace.x0 = x0;
    trace.u = u;
    trace.y = y;
    trace.epsilon = epsilon;
    trace.steps.resize(n);

    const FftPlan plan(y.side);
    Image x = x0;
    for (int k = 0; k < n; ++k)
        x = detail::gs_step_kernel(plan, x, &u, y, epsilon, &trace.steps[k]);
    return {std::move(x), std::move(trace)};
}

double unrolled_loss(const Image& x_true, const Image& x0, const Image& u, const Measurement& y,
                     int n, double epsilon) {
    check_unroll_inputs(x0, u, y, n);
    const FftPlan plan(y.side);
    Image x = x0;
    for (int k = 0; k < n; ++k) x = detail::gs_step_kernel(plan, x, &u, y, epsilon, nullptr);
    return mse(x, x_true);
}

KinkReport kink_report(const UnrollTrace& trace) {
    KinkReport report;
    report.min_abs_pre_relu = std::numeric_limits<double>::infinity();
    report.min_spectrum_mag = std::numeric_limits<double>::infinity();
    for (const auto& step : trace.steps) {
        for (double v : step.pre_relu.data)
            report.min_abs_pre_relu = std::min(report.min_abs_pre_relu, std::abs(v));
        for (const auto& z : step.z.data)
            report.min_spectrum_mag = std::min(report.min_spectrum_mag, std::abs(z));
    }
    return report;
}

LossAndGrad loss_and_grad_u(const Image& x_true, const Image& x0, const Image& u,
                            const Measurement& y, int n, double epsilon) {
    if (x_true.side != x0.side)
        throw std::invalid_argument("loss_and_grad_u: x_true side does not match x0 side");
    const int d = x0.side;
    const size_t cells = static_cast<size_t>(d) * d;

    if (n == 0) {
        // No iterations run, so the reference never enters the output.
        LossAndGrad out;
        out.loss = mse(x0, x_true);
        out.grad_u = image_new(d, 0.0);
        return out;
    }

    auto [xn, trace] = unrolled_forward(x0, u, y, n, epsilon);
    const FftPlan plan(y.side);

    LossAndGrad out;
    out.loss = mse(xn, x_true);
    out.grad_u = image_new(d, 0.0);

    // d loss / d x_n for loss = (1/d^2) * sum (x_n - x_true)^2.
    Image gx(d, std::vector<double>(cells));
    const double scale = 2.0 / static_cast<double>(cells);
    for (size_t i = 0; i < cells; ++i) gx.data[i] = scale * (xn.data[i] - x_true.data[i]);

    for (int k = n - 1; k >= 0; --k) {
        const detail::GsStepRecord& step = trace.steps[k];

        // ReLU: pass gradient only where the pre-activation was positive.
        Image g_pre(d, std::vector<double>(cells));
        for (size_t i = 0; i < cells; ++i)
            g_pre.data[i] = step.pre_relu.data[i] > 0.0 ? gx.data[i] : 0.0;

        // pre_relu = extract(Re(idft2(phase .* y))) - u.
        for (size_t i = 0; i < cells; ++i) out.grad_u.data[i] -= g_pre.data[i];

        // Adjoint of extract(Re(idft2(.))) is dft2 of the embedded real grid
        // (the unitary transform is its own adjoint up to conjugation).
        const Spectrum gq = plan.dft2(embed(g_pre, y.oversampling));

        // constrained = phase .* y with real y.
        Spectrum gp(y.side, std::vector<std::complex<double>>(gq.data.size()));
        for (size_t i = 0; i < gq.data.size(); ++i) gp.data[i] = gq.data[i] * y.data[i];

        // phase = z / max(|z|, eps). Away from the guard this is the radial
        // projection whose (self-adjoint) Jacobian is
        //   (g - p * Re(conj(p) g)) / |z|;
        // where the guard binds the map is linear with slope 1/eps.
        Spectrum gz(y.side, std::vector<std::complex<double>>(gq.data.size()));
        for (size_t i = 0; i < gz.data.size(); ++i) {
            const double mag = std::abs(step.z.data[i]);
            if (mag > epsilon) {
                const std::complex<double> p = step.phase.data[i];
                const std::complex<double> g = gp.data[i];
                const double radial = p.real() * g.real() + p.imag() * g.imag();
                gz.data[i] = (g - p * radial) / mag;
            } else {
                gz.data[i] = gp.data[i] / epsilon;
            }
        }

        // z = dft2(embed(x_k + u)); the adjoint maps back through idft2 and
        // support extraction. This contribution feeds both u and x_k.
        const Spectrum ge = plan.idft2(gz);
        Image ga(d, std::vector<double>(cells));
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) ga.at(r, c) = ge.at(r, c).real();

        for (size_t i = 0; i < cells; ++i) out.grad_u.data[i] += ga.data[i];
        gx = std::move(ga);
    }

    if (!all_finite(out.grad_u))
        throw std::runtime_error("loss_and_grad_u: non-finite gradient (check epsilon)");
    return out;
}

AdamState adam_init(int side, const AdamConfig& config) {
    if (side < 1) throw std::invalid_argument("adam_init: side must be >= 1");
    AdamState state;
    state.side = side;
    state.m.assign(static_cast<size_t>(side) * side, 0.0);
    state.v.assign(static_cast<size_t>(side) * side, 0.0);
    state.t = 0;
    state.config = config;
    return state;
}

Image adam_step(AdamState& state, const Image& u, const Image& grad) {
    if (u.side != state.side || grad.side != state.side)
        throw std::invalid_argument("adam_step: side mismatch");
    const AdamConfig& c = state.config;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    Image out = u;
    for (size_t i = 0; i < out.data.size(); ++i) {
        const double g = grad.data[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        out.data[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
    return clip01(out);
}

namespace {

void check_train_config(const TrainConfig& cfg) {
    if (cfg.unroll_steps < 1) throw std::invalid_argument("TrainConfig: unroll_steps must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (cfg.max_batches < 0) throw std::invalid_argument("TrainConfig: max_batches must be >= 0");
    if (cfg.oversampling != 1 && cfg.oversampling != 2)
        throw std::invalid_argument("TrainConfig: oversampling must be 1 or 2");
    if (cfg.val_every < 1) throw std::invalid_argument("TrainConfig: val_every must be >= 1");
    if (cfg.plateau_patience < 1)
        throw std::invalid_argument("TrainConfig: plateau_patience must be >= 1");
}

} // namespace

TrainResult train_reference(const std::vector<Image>& dataset, const TrainConfig& cfg) {
    check_train_config(cfg);
    if (dataset.empty()) throw std::invalid_argument("train_reference: dataset is empty");
    const int d = dataset.front().side;
    for (const Image& img : dataset)
        if (img.side != d)
            throw std::invalid_argument("train_reference: dataset images must share one side");

    const int n_total = static_cast<int>(dataset.size());
    const int n_val = std::max(1, n_total / 10);
    const int n_train = n_total - n_val;
    if (n_train < 1)
        throw std::invalid_argument("train_reference: dataset too small to carve a validation "
                                    "split (need at least 2 images)");
    const int batch = std::min(cfg.batch_size, n_train);

    const Rng base(cfg.seed);
    Rng u_rng = base.derive(1);
    Rng shuffle_rng = base.derive(2);

    // Solver starts are fixed per image for the whole run, so successive
    // Adam steps see a loss that changes only through u.
    std::vector<Image> x0s;
    x0s.reserve(dataset.size());
    for (int i = 0; i < n_total; ++i) {
        Rng r = base.derive(0x100000 + static_cast<std::uint64_t>(i));
        x0s.push_back(random_uniform_image(d, r));
    }

    TrainResult result;
    result.train_count = n_train;
    result.val_count = n_val;
    result.reference = random_uniform_image(d, u_rng);
    result.adam = adam_init(d, AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});

    auto validation_mse = [&](const Image& u) {
        double acc = 0.0;
        for (int j = n_train; j < n_total; ++j) {
            const Measurement y = measure(dataset[j], &u, cfg.oversampling);
            acc += unrolled_loss(dataset[j], x0s[j], u, y, cfg.unroll_steps, cfg.epsilon);
        }
        return acc / n_val;
    };

    double best_val = validation_mse(result.reference);
    result.history.push_back({0, kNaN, best_val});

    std::vector<int> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    int cursor = n_train; // forces a shuffle before the first batch

    int stale_evals = 0;
    result.stop_reason = "max_batches";
    for (int step = 1; step <= cfg.max_batches; ++step) {
        if (cursor + batch > n_train) {
            for (int i = n_train - 1; i > 0; --i) {
                const int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
                std::swap(order[i], order[j]);
            }
            cursor = 0;
        }

        Image grad = image_new(d, 0.0);
        double train_loss = 0.0;
        for (int b = 0; b < batch; ++b) {
            const int idx = order[cursor + b];
            const Measurement y = measure(dataset[idx], &result.reference, cfg.oversampling);
            const LossAndGrad lg = loss_and_grad_u(dataset[idx], x0s[idx], result.reference, y,
                                                   cfg.unroll_steps, cfg.epsilon);
            train_loss += lg.loss;
            for (size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += lg.grad_u.data[i];
        }
        cursor += batch;
        train_loss /= batch;
        for (double& g : grad.data) g /= batch;

        result.reference = adam_step(result.adam, result.reference, grad);

        TrainRecord record{step, train_loss, kNaN};
        if (step % cfg.val_every == 0) {
            record.val_mse = validation_mse(result.reference);
            if (record.val_mse < best_val) {
                best_val = record.val_mse;
                stale_evals = 0;
            } else {
                ++stale_evals;
            }
        }
        result.history.push_back(record);

        if (cfg.plateau_stop && stale_evals >= cfg.plateau_patience) {
            result.stop_reason = "plateau";
            break;
        }
    }
    return result;
}

GradCheckResult run_gradient_check(const GradCheckConfig& cfg) {
    if (cfg.trials < 0) throw std::invalid_argument("run_gradient_check: trials must be >= 0");
    if (cfg.sides.empty() || cfg.unrolls.empty() || cfg.oversamplings.empty())
        throw std::invalid_argument("run_gradient_check: empty parameter set");

    GradCheckResult result;
    Rng stream = Rng(cfg.seed).derive(0xA11CE);

    for (int trial = 0; trial < cfg.trials; ++trial) {
        const int d = cfg.sides[trial % cfg.sides.size()];
        const int n = cfg.unrolls[trial % cfg.unrolls.size()];
        const int s = cfg.oversamplings[trial % cfg.oversamplings.size()];

        Image x_true, u, x0;
        Measurement y;
        UnrollTrace trace;
        Image xn;
        int attempts = 0;
        while (true) {
            if (++attempts > 1000)
                throw std::runtime_error("run_gradient_check: could not draw a kink-free "
                                         "instance in 1000 attempts");
            x_true = random_uniform_image(d, stream);
            u = random_uniform_image(d, stream);
            x0 = random_uniform_image(d, stream);
            y = measure(x_true, &u, s);
            std::tie(xn, trace) = unrolled_forward(x0, u, y, n);
            const KinkReport kinks = kink_report(trace);
            if (kinks.min_abs_pre_relu >= cfg.kink_margin &&
                kinks.min_spectrum_mag >= cfg.kink_margin)
                break;
            ++result.resamples;
        }

        LossAndGrad analytic = loss_and_grad_u(x_true, x0, u, y, n);
        if (cfg.corrupt != 0.0) analytic.grad_u.data[0] += cfg.corrupt;

        const double h = cfg.fd_step;
        for (int idx = 0; idx < d * d; ++idx) {
            Image up = u, um = u;
            up.data[idx] += h;
            um.data[idx] -= h;
            const double lp = unrolled_loss(x_true, x0, up, y, n);
            const double lm = unrolled_loss(x_true, x0, um, y, n);
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic.grad_u.data[idx];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-7});
            result.max_rel_error = std::max(result.max_rel_error, std::abs(fd - an) / denom);
        }
        ++result.trials_run;
    }
    return result;
}

} // namespace phaseref
