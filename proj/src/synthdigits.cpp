#include "phaseref/synthdigits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phaseref {

namespace {

struct Pt {
    double x, y;
};

using Stroke = std::vector<Pt>; // polyline in glyph coordinates ([0,1]^2, y down)

/// Elliptical arc sampled as a polyline; angles in radians, y grows down.
Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 14) {
    Stroke s;
    s.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * i / n;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return s;
}

const double kPi = 3.14159265358979323846;

/// Stroke skeletons for the ten digits, hand-placed inside [0.15, 0.85]^2.
std::vector<Stroke> glyph(int digit) {
    switch (digit) {
        case 0:
            return {arc(0.5, 0.5, 0.22, 0.3, 0.0, 2.0 * kPi, 24)};
        case 1:
            return {{{0.38, 0.32}, {0.52, 0.2}, {0.52, 0.8}}, {{0.38, 0.8}, {0.66, 0.8}}};
        case 2:
            return {arc(0.5, 0.38, 0.2, 0.18, -kPi, 0.2, 10),
                    {{0.68, 0.44}, {0.32, 0.8}, {0.7, 0.8}}};
        case 3:
            return {arc(0.48, 0.35, 0.18, 0.15, -kPi * 0.9, kPi * 0.5, 10),
                    arc(0.48, 0.65, 0.2, 0.17, -kPi * 0.5, kPi * 0.9, 10)};
        case 4:
            return {{{0.6, 0.8}, {0.6, 0.2}, {0.3, 0.62}, {0.74, 0.62}}};
        case 5:
            return {{{0.68, 0.2}, {0.36, 0.2}, {0.34, 0.48}},
                    arc(0.5, 0.62, 0.19, 0.18, -kPi * 0.55, kPi * 0.85, 12)};
        case 6:
            return {{{0.62, 0.2}, {0.4, 0.45}, {0.34, 0.62}},
                    arc(0.52, 0.64, 0.18, 0.16, 0.0, 2.0 * kPi, 20)};
        case 7:
            return {{{0.32, 0.2}, {0.7, 0.2}, {0.44, 0.8}}};
        case 8:
            return {arc(0.5, 0.36, 0.16, 0.15, 0.0, 2.0 * kPi, 20),
                    arc(0.5, 0.66, 0.19, 0.16, 0.0, 2.0 * kPi, 20)};
        case 9:
            return {arc(0.48, 0.36, 0.18, 0.16, 0.0, 2.0 * kPi, 20),
                    {{0.66, 0.36}, {0.62, 0.8}}};
        default:
            throw std::invalid_argument("glyph: digit out of range");
    }
}

double dist_to_segment(Pt p, Pt a, Pt b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = p.x - a.x, wy = p.y - a.y;
    const double vv = vx * vx + vy * vy;
    const double t = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    const double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace

std::vector<Image> synthetic_digits(int count, int side, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("synthetic_digits: count must be >= 1");
    if (side < 8) throw std::invalid_argument("synthetic_digits: side must be >= 8");

    const Rng base(seed);
    std::vector<Image> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng = base.derive(std::uint64_t(i));
        const double angle = (rng.next_double() - 0.5) * 0.3;
        const double scale = 0.9 + 0.2 * rng.next_double();
        const double tx = (rng.next_double() - 0.5) * 0.1;
        const double ty = (rng.next_double() - 0.5) * 0.1;
        const double halfw = 0.020 + 0.015 * rng.next_double();
        // Stroke intensity stays below saturation so signal energy is a fraction of a
        // typical reference's; full-brightness strokes put many instances outside the
        // iterative solvers' benign basin at this grid size.
        const double intensity = 0.55 + 0.15 * rng.next_double();
        const double ca = std::cos(angle), sa = std::sin(angle);

        std::vector<Stroke> strokes = glyph(i % 10);
        for (Stroke& s : strokes)
            for (Pt& p : s) {
                const double x = (p.x - 0.5) * scale, y = (p.y - 0.5) * scale;
                p = {0.5 + ca * x - sa * y + tx, 0.5 + sa * x + ca * y + ty};
            }

        Image img = image_new(side, 0.0);
        const double soft = 0.7 / side; // one-ish pixel of antialiasing
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                const Pt p{(c + 0.5) / side, (r + 0.5) / side};
                double dist = 1e9;
                for (const Stroke& s : strokes)
                    for (size_t k = 0; k + 1 < s.size(); ++k)
                        dist = std::min(dist, dist_to_segment(p, s[k], s[k + 1]));
                img.at(r, c) = intensity * std::clamp(1.0 - (dist - halfw) / soft, 0.0, 1.0);
            }
        out.push_back(std::move(img));
    }
    return out;
}

} // namespace phaseref
