#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/references.hpp"
#include "phaseref/registration.hpp"

using namespace phaseref;

TEST_CASE("random_reference draws uniform pixels deterministically") {
    Rng a(91), b(91), c(92);
    const Image ra = random_reference(64, a);
    const Image rb = random_reference(64, b);
    const Image rc = random_reference(64, c);

    double mean = 0.0;
    for (size_t i = 0; i < ra.data.size(); ++i) {
        CHECK(ra.data[i] >= 0.0);
        CHECK(ra.data[i] < 1.0);
        CHECK_EQ(ra.data[i], rb.data[i]);
        mean += ra.data[i];
    }
    mean /= double(ra.data.size());
    CHECK(mean > 0.45);
    CHECK(mean < 0.55);

    double diff = 0.0;
    for (size_t i = 0; i < ra.data.size(); ++i) diff += std::abs(ra.data[i] - rc.data[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("random_binary_reference is a fair deterministic coin per pixel") {
    Rng a(93), b(93);
    const Image ra = random_binary_reference(64, a);
    const Image rb = random_binary_reference(64, b);
    double ones = 0.0;
    for (size_t i = 0; i < ra.data.size(); ++i) {
        CHECK((ra.data[i] == 0.0 || ra.data[i] == 1.0));
        CHECK_EQ(ra.data[i], rb.data[i]);
        ones += ra.data[i];
    }
    const double frac = ones / double(ra.data.size());
    CHECK(frac > 0.4);
    CHECK(frac < 0.6);

    CHECK_THROWS_AS(random_binary_reference(0, a), std::invalid_argument);
}

TEST_CASE("simple_reference is binary for a spread of sizes and parameters") {
    Rng rng(94);
    for (int d : {4, 7, 16, 28}) {
        const Image ref = simple_reference(d, SimpleRefParams{}, rng);
        CHECK_EQ(ref.side, d);
        for (double v : ref.data) CHECK((v == 0.0 || v == 1.0));
    }

    SimpleRefParams heavy;
    heavy.noise_weight = 0.6;
    heavy.poisson_rate = 2.0;
    const Image noisy = simple_reference(16, heavy, rng);
    for (double v : noisy.data) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("without noise the reference is a connected blob in the bottom-right") {
    SimpleRefParams quiet;
    quiet.noise_weight = 0.0;
    Rng r1(95), r2(96);
    const int d = 16;
    const Image a = simple_reference(d, quiet, r1);
    const Image b = simple_reference(d, quiet, r2);
    // No noise means no rng consumption: the result ignores the seed.
    for (size_t i = 0; i < a.data.size(); ++i) CHECK_EQ(a.data[i], b.data[i]);

    // Default square side is 4, blur radius ceil(3 * 1.6) = 5, so nothing
    // reaches rows or columns below 12 - 5 = 7.
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            if (r < 7 || c < 7) CHECK_EQ(a.at(r, c), 0.0);

    int ones = 0;
    for (double v : a.data) ones += v == 1.0 ? 1 : 0;
    CHECK(ones >= 1);

    // The normalized peak is 1 >= threshold, so the square's center is on.
    // Flood fill from any lit pixel must reach every other lit pixel.
    int seed_r = -1, seed_c = -1;
    for (int r = 0; r < d && seed_r < 0; ++r)
        for (int c = 0; c < d; ++c)
            if (a.at(r, c) == 1.0) {
                seed_r = r;
                seed_c = c;
                break;
            }
    REQUIRE(seed_r >= 0);
    std::vector<char> seen(static_cast<size_t>(d) * d, 0);
    std::queue<std::pair<int, int>> frontier;
    frontier.push({seed_r, seed_c});
    seen[static_cast<size_t>(seed_r) * d + seed_c] = 1;
    int reached = 0;
    while (!frontier.empty()) {
        auto [r, c] = frontier.front();
        frontier.pop();
        ++reached;
        const int dr[] = {1, -1, 0, 0};
        const int dc[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int rr = r + dr[k], cc = c + dc[k];
            if (rr < 0 || rr >= d || cc < 0 || cc >= d) continue;
            if (a.at(rr, cc) != 1.0) continue;
            if (seen[static_cast<size_t>(rr) * d + cc]) continue;
            seen[static_cast<size_t>(rr) * d + cc] = 1;
            frontier.push({rr, cc});
        }
    }
    CHECK_EQ(reached, ones);
}

TEST_CASE("the corner anchor breaks 180-degree symmetry") {
    Rng rng(97);
    const Image ref = simple_reference(28, SimpleRefParams{}, rng);
    const Image flipped = flip180(ref);
    double worst = 0.0;
    for (size_t i = 0; i < ref.data.size(); ++i)
        worst = std::max(worst, std::abs(ref.data[i] - flipped.data[i]));
    CHECK_EQ(worst, 1.0);
}

TEST_CASE("simple_reference is seed-deterministic and the noise term matters") {
    SimpleRefParams params;
    params.noise_weight = 0.6;
    params.poisson_rate = 2.0;
    Rng a(98), b(98);
    const Image ra = simple_reference(28, params, a);
    const Image rb = simple_reference(28, params, b);
    for (size_t i = 0; i < ra.data.size(); ++i) CHECK_EQ(ra.data[i], rb.data[i]);

    SimpleRefParams quiet = params;
    quiet.noise_weight = 0.0;
    Rng c(98);
    const Image rq = simple_reference(28, quiet, c);
    double diff = 0.0;
    for (size_t i = 0; i < ra.data.size(); ++i) diff += std::abs(ra.data[i] - rq.data[i]);
    CHECK(diff >= 1.0);
}

TEST_CASE("the default reference shows flat areas: mostly dark, a solid lit blob") {
    Rng rng(2);
    const Image ref = simple_reference(28, SimpleRefParams{}, rng);
    int ones = 0, zeros = 0;
    for (double v : ref.data) {
        ones += v == 1.0 ? 1 : 0;
        zeros += v == 0.0 ? 1 : 0;
    }
    const int total = 28 * 28;
    CHECK(ones * 10 >= total);  // at least 10% lit on this seed
    CHECK(zeros * 10 >= total * 3); // at least 30% dark
}

TEST_CASE("simple_reference validates its parameters") {
    Rng rng(100);
    CHECK_THROWS_AS(simple_reference(3, SimpleRefParams{}, rng), std::invalid_argument);

    SimpleRefParams bad;
    bad.square_side = 0;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.square_side = 9;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.sigma = 0.0;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.noise_weight = -0.1;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.poisson_rate = 0.0;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.threshold = 0.0;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
    bad = SimpleRefParams{};
    bad.threshold = 1.0;
    CHECK_THROWS_AS(simple_reference(8, bad, rng), std::invalid_argument);
}
