#include <doctest.h>

#include <cmath>

#include "microvol/error.hpp"
#include "microvol/estimators.hpp"
#include "microvol/limit_models.hpp"
#include "microvol/rng.hpp"
#include "microvol/special_functions.hpp"

using namespace microvol;

namespace {

PathGrid brownian_path(std::size_t steps, std::uint64_t seed, double sigma = 1.0) {
    const auto dB = brownian_increments(steps, 1.0, seed);
    PathGrid p;
    p.times = uniform_times(steps + 1);
    p.values.assign(steps + 1, 0.0);
    for (std::size_t k = 0; k < steps; ++k) p.values[k + 1] = p.values[k] + sigma * dB[k];
    return p;
}

}  // namespace

TEST_CASE("mean estimate") {
    const auto e = mean_estimate({1.0, 2.0, 3.0, 4.0});
    CHECK(e.point == 2.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(e.n == 4);
    CHECK(e.lower() < e.point);
    CHECK(e.upper(1.0) == doctest::Approx(e.point + e.std_error));
    CHECK(to_json(e)["point"] == 2.5);
}

TEST_CASE("realized variance of a straight line") {
    PathGrid p;
    p.times = uniform_times(1001);
    p.values = p.times;
    const PathGrid rv = realized_variance(p, 0.1);
    REQUIRE(rv.size() == 10);
    for (std::size_t w = 0; w < rv.size(); ++w) {
        CHECK(rv.times[w] == doctest::Approx(0.1 * w));
        CHECK(rv.values[w] == doctest::Approx(1e-4).epsilon(1e-9));
    }
    CHECK_THROWS_AS(realized_variance(p, 2.0), Error);
    CHECK_THROWS_AS(realized_variance(p, 0.0), Error);
}

TEST_CASE("realized variance of a step path counts each jump once") {
    PathGrid p;
    p.times = {0.0, 0.25, 0.5, 0.75, 1.0};
    p.values = {0.0, 1.0, 3.0, 2.0, 2.0};
    const PathGrid rv = realized_variance(p, 0.5);
    REQUIRE(rv.size() == 2);
    CHECK(rv.values[0] == doctest::Approx(1.0 + 4.0));
    CHECK(rv.values[1] == doctest::Approx(1.0));
}

TEST_CASE("Brownian realized variance sums to sigma^2 t") {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const PathGrid rv = realized_variance(brownian_path(2000, s, 0.5), 0.25);
        for (double v : rv.values) total += v;
    }
    CHECK(total / 50 == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("quadratic covariation on unequal grids") {
    PathGrid x, y;
    x.times = {0.0, 1.0, 2.0};
    x.values = {1.0, 2.0, 4.0};
    y.times = {0.5, 2.0};
    y.values = {3.0, 1.0};
    // common grid {0, 0.5, 1, 2}: dx = (1, 0, 1, 2), dy = (0, 3, 0, -2), x read as 0 before t = 0
    CHECK(quadratic_covariation(x, y) == doctest::Approx(-4.0));
    CHECK(quadratic_covariation(x, x) == doctest::Approx(1.0 + 1.0 + 4.0));
}

TEST_CASE("quadratic covariation of correlated Brownian motions") {
    const double rho = -0.6;
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = brownian_increments(4000, 1.0, 2 * s);
        const auto b = brownian_increments(4000, 1.0, 2 * s + 1);
        PathGrid x, y;
        x.times = y.times = uniform_times(4001);
        x.values.assign(4001, 0.0);
        y.values.assign(4001, 0.0);
        for (std::size_t k = 0; k < 4000; ++k) {
            x.values[k + 1] = x.values[k] + a[k];
            y.values[k + 1] = y.values[k] + rho * a[k] + std::sqrt(1 - rho * rho) * b[k];
        }
        acc += quadratic_covariation(x, y);
    }
    CHECK(acc / 20 == doctest::Approx(rho).epsilon(0.03));
}

TEST_CASE("pearson correlation") {
    std::vector<double> x, y, z;
    for (int i = 0; i < 50; ++i) {
        x.push_back(i);
        y.push_back(3.0 - 2.0 * i);
        z.push_back(std::sin(0.7 * i));
    }
    CHECK(pearson(x, y).point == doctest::Approx(-1.0));
    CHECK(pearson(x, y).std_error == doctest::Approx(0.0));
    const auto r = pearson(x, z);
    CHECK(std::abs(r.point) < 0.3);
    CHECK(r.std_error == doctest::Approx((1 - r.point * r.point) / std::sqrt(47.0)));
    CHECK_THROWS_AS(pearson(x, std::vector<double>(50, 1.0)), Error);
    CHECK_THROWS_AS(pearson({1.0, 2.0}, {1.0, 2.0}), Error);
}

TEST_CASE("leverage correlation picks up the sign of the Heston correlation") {
    HestonParams h{1.0, 4.0, 1.5, -0.7, 1.0, 0.0};
    std::vector<PathGrid> prices;
    for (std::uint64_t s = 0; s < 40; ++s) prices.push_back(simulate_heston(h, 1e-3, 10.0, s).price);
    const auto lev = leverage_correlation(prices, 0.2);
    CHECK(lev.point < 0.0);
    CHECK(lev.upper() < 0.0);

    h.rho = 0.0;
    prices.clear();
    for (std::uint64_t s = 0; s < 40; ++s) prices.push_back(simulate_heston(h, 1e-3, 10.0, s).price);
    const auto flat = leverage_correlation(prices, 0.2);
    CHECK(std::abs(flat.point) < 4.0 * flat.std_error);
}

TEST_CASE("Hurst estimate recovers Brownian and fractional exponents") {
    std::vector<PathGrid> bm;
    for (std::uint64_t s = 0; s < 200; ++s) bm.push_back(brownian_path(1024, s));
    CHECK(hurst_moment_scaling(bm).point == doctest::Approx(0.5).epsilon(0.04));

    for (double H : {0.1, 0.3}) {
        const FbmGenerator gen(H, 1024);
        Rng rng(17);
        std::vector<PathGrid> fb;
        for (int s = 0; s < 200; ++s) fb.push_back(gen.sample(rng));
        const auto e = hurst_moment_scaling(fb);
        INFO("H = " << H);
        CHECK(std::abs(e.point - H) < 0.02);
    }
    CHECK_THROWS_AS(hurst_moment_scaling({}), Error);
    CHECK_THROWS_AS(hurst_moment_scaling(bm, {1.0}, {1, 2000}), Error);
}

TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_critical(0.01) == doctest::Approx(1.6276).epsilon(1e-3));
    CHECK(kolmogorov_survival(kolmogorov_critical(0.2)) == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("two-sample KS") {
    Rng rng(3);
    std::vector<double> a, b, c;
    for (int i = 0; i < 2000; ++i) {
        a.push_back(rng.normal());
        b.push_back(rng.normal());
        c.push_back(rng.normal() + 0.3);
    }
    const auto same = ks_two_sample(a, b);
    CHECK_FALSE(same.reject);
    CHECK(same.statistic < same.critical);
    CHECK(same.p_value > 0.01);
    const auto shifted = ks_two_sample(a, c);
    CHECK(shifted.reject);
    CHECK(shifted.p_value < 1e-6);
    // exact statistic on a small example: sup |F_a - F_b| = 2/3
    CHECK(ks_two_sample({1, 2, 3}, {2.5, 3.5, 4.5}).statistic == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("one-sample KS against a known cdf") {
    Rng rng(4);
    std::vector<double> u;
    for (int i = 0; i < 3000; ++i) u.push_back(rng.uniform());
    CHECK_FALSE(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).reject);
    CHECK(ks_one_sample(u, [](double x) { return std::clamp(x * x, 0.0, 1.0); }).reject);
    CHECK(ks_one_sample({0.5}, [](double x) { return std::clamp(x, 0.0, 1.0); }).statistic == doctest::Approx(0.5));
}
