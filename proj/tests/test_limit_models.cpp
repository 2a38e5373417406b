#include <doctest.h>

#include <cmath>
#include <numeric>

#include "microvol/error.hpp"
#include "microvol/limit_models.hpp"
#include "microvol/rng.hpp"

using namespace microvol;

namespace {

KernelMatrixSpec light_spec(double beta = 3.0) {
    const double w2 = 0.2;
    return build_kernel_matrix(KernelFunction::exponential(1.0 - beta * w2, 1.0), KernelFunction::exponential(w2, 1.0),
                               beta);
}

KernelMatrixSpec heavy_spec() {
    return build_kernel_matrix(KernelFunction::shifted_power_law(0.4, 0.6), KernelFunction::shifted_power_law(0.2, 0.6),
                               3.0);
}

// Plain power series of E_{a,1}; fine for |z| <= 2.
double ml_series_oracle(double a, double z) {
    double s = 0.0;
    for (int k = 0; k < 80; ++k) s += std::pow(z, k) / std::tgamma(a * k + 1.0);
    return s;
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double stderr_of(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (x.size() - 1) / x.size());
}

}  // namespace

TEST_CASE("Heston parameters from the light kernel") {
    const auto p = heston_params_from_micro(light_spec(), AsymptoticSequence::light(1.0, 1.0));
    CHECK(p.kappa == doctest::Approx(1.0));
    CHECK(p.theta == doctest::Approx(4.0));
    CHECK(p.xi == doctest::Approx(std::sqrt(10.0 / 4.0)));
    CHECK(p.rho == doctest::Approx(-0.4472135955));
    CHECK(p.price_scale == doctest::Approx(0.8838834765));
    CHECK(p.x0 == 0.0);

    const auto q = heston_params_from_micro(light_spec(), AsymptoticSequence::light(2.0, 0.5));
    CHECK(q.kappa == doctest::Approx(2.0));
    CHECK(q.theta == doctest::Approx(1.0));

    CHECK(leverage_rho(1.0) == 0.0);
    const auto sym = heston_params_from_micro(light_spec(1.0), AsymptoticSequence::light(1.0, 1.0));
    CHECK(sym.theta == doctest::Approx(2.0));
    CHECK(sym.rho == 0.0);
    for (double b = 1.0; b < 20.0; b += 0.5) {
        CHECK(leverage_rho(b) <= 0.0);
        CHECK(leverage_rho(b) > -std::sqrt(0.5));
    }
}

TEST_CASE("rough Heston parameters from the heavy kernel") {
    const auto p = rough_params_from_micro(heavy_spec(), AsymptoticSequence::heavy(0.6, 1.0, 1.0));
    const double lambda_eff = 1.0 / std::tgamma(0.4);
    CHECK(p.alpha == 0.6);
    CHECK(p.lambda_eff == doctest::Approx(lambda_eff));
    CHECK(p.lambda_eff == doctest::Approx(0.450824).epsilon(1e-5));
    CHECK(p.theta == doctest::Approx(4.0));
    CHECK(p.nu == doctest::Approx(lambda_eff * std::sqrt(10.0 / 4.0)));
    CHECK(p.rho == doctest::Approx(-0.4472135955));
    CHECK(p.beta == 3.0);

    const auto g = generic_rough_cir(p);
    CHECK(g.lambda == p.lambda_eff);
    CHECK(g.nu == doctest::Approx(std::sqrt(2.5)));

    CHECK_THROWS_AS(rough_params_from_micro(light_spec(), AsymptoticSequence::light(1.0, 1.0)), Error);
}

TEST_CASE("CIR without noise solves the mean-reversion ODE to first order") {
    const CirParams p{2.0, 1.5, 0.0, 0.0};
    auto err = [&](std::size_t n) {
        const PathGrid x = simulate_cir(p, std::vector<double>(n, 0.0), 2.0);
        double w = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
            w = std::max(w, std::abs(x.values[k] - 1.5 * (1.0 - std::exp(-2.0 * x.times[k]))));
        return w;
    };
    CHECK(err(2000) < 2e-3);
    const double r = err(400) / err(800);
    CHECK(r > 1.8);
    CHECK(r < 2.2);
    CHECK_THROWS_AS(simulate_cir(p, std::vector<double>(10, 0.0), 1.0), Error);
}

TEST_CASE("CIR and Heston paths stay nonnegative") {
    const CirParams p{1.0, 0.2, 2.0, 0.0};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const PathGrid x = simulate_cir(p, 1e-3, 1.0, s);
        CHECK(*std::min_element(x.values.begin(), x.values.end()) >= 0.0);
    }
    const auto h = heston_params_from_micro(light_spec(), AsymptoticSequence::light(1.0, 1.0));
    const auto hp = simulate_heston(h, 1e-3, 1.0, 3);
    CHECK(*std::min_element(hp.variance.values.begin(), hp.variance.values.end()) >= 0.0);
    CHECK(hp.price.values.front() == 0.0);
}

TEST_CASE("Heston increments carry the leverage correlation") {
    const auto h = heston_params_from_micro(light_spec(), AsymptoticSequence::light(1.0, 1.0));
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto path = simulate_heston(h, 1e-3, 5.0, 100 + s);
        for (std::size_t k = 0; k + 1 < path.price.size(); ++k) {
            const double x = std::sqrt(path.variance.values[k]);
            if (x <= 0.0) continue;
            const double dp = (path.price.values[k + 1] - path.price.values[k]) / x;
            const double dv = path.variance.values[k + 1] - path.variance.values[k] - h.kappa * (h.theta - x * x) * 1e-3;
            const double dvn = dv / x;
            sxy += dp * dvn;
            sxx += dp * dp;
            syy += dvn * dvn;
        }
    }
    CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(h.rho).epsilon(0.05));
}

TEST_CASE("Heston price is a martingale with quadratic variation scale^2 int X") {
    const auto h = heston_params_from_micro(light_spec(), AsymptoticSequence::light(1.0, 1.0));
    std::vector<double> ends;
    double qv = 0.0, iv = 0.0;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto path = simulate_heston(h, 1e-3, 2.0, 1000 + s);
        ends.push_back(path.price.values.back());
        for (std::size_t k = 0; k + 1 < path.price.size(); ++k) {
            const double d = path.price.values[k + 1] - path.price.values[k];
            qv += d * d;
            iv += h.price_scale * h.price_scale * path.variance.values[k] * 1e-3;
        }
    }
    CHECK(std::abs(mean(ends)) < 4.0 * stderr_of(ends));
    CHECK(qv / iv == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("noise-free rough CIR matches theta F on the grid") {
    const GenericRoughCirParams p{1.0, 2.0, 0.0, 0.6};
    const std::size_t n = 4096;
    for (RoughForm form : {RoughForm::fractional, RoughForm::mittag_leffler}) {
        const PathGrid v = simulate_rough_cir(p, form, std::vector<double>(n, 0.0));
        double worst = 0.0;
        for (std::size_t k = 0; k <= n; k += 64) {
            const double t = v.times[k];
            const double exact = 2.0 * (1.0 - ml_series_oracle(0.6, -std::pow(t, 0.6)));
            worst = std::max(worst, std::abs(v.values[k] - exact));
        }
        INFO(to_string(form));
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("fractional drift converges under refinement") {
    const GenericRoughCirParams p{1.5, 1.0, 0.0, 0.7};
    auto end_err = [&](std::size_t n) {
        const PathGrid v = simulate_rough_cir(p, RoughForm::fractional, std::vector<double>(n, 0.0));
        return std::abs(v.values.back() - (1.0 - ml_series_oracle(0.7, -1.5)));
    };
    CHECK(end_err(1024) < end_err(256));
}

TEST_CASE("both rough forms agree for small vol-of-vol") {
    const GenericRoughCirParams p{1.0, 1.0, 0.1, 0.6};
    const std::size_t n = 1024;
    const RoughCirScheme frac(p, RoughForm::fractional, n);
    const RoughCirScheme ml(p, RoughForm::mittag_leffler, n);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto dB = brownian_increments(n, 1.0, 500 + s);
        const PathGrid a = frac.solve(dB), b = ml.solve(dB);
        for (std::size_t k = 0; k <= n; ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("rough CIR refinement shrinks the discretisation gap at small vol-of-vol") {
    // sup |V_2n - V_n| on the coarse grid vs sup |V_4n - V_2n|, same Brownian path.
    const GenericRoughCirParams p{1.0, 1.0, 0.1, 0.6};
    double d1 = 0.0, d2 = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto fine = brownian_increments(2048, 1.0, 900 + s);
        const auto mid = aggregate_increments(fine, 2);
        const auto coarse = aggregate_increments(fine, 4);
        const auto vf = simulate_rough_cir(p, RoughForm::fractional, fine);
        const auto vm = simulate_rough_cir(p, RoughForm::fractional, mid);
        const auto vc = simulate_rough_cir(p, RoughForm::fractional, coarse);
        for (std::size_t k = 0; k < vc.size(); ++k) {
            d1 = std::max(d1, std::abs(vm.values[2 * k] - vc.values[k]));
            d2 = std::max(d2, std::abs(vf.values[4 * k] - vm.values[2 * k]));
        }
    }
    CHECK(d1 / d2 > 1.0);
}

TEST_CASE("rough CIR near alpha = 1 approaches classical CIR") {
    const GenericRoughCirParams p{1.0, 1.0, 0.3, 0.999};
    const CirParams c{1.0, 1.0, 0.3, 0.0};
    const std::size_t n = 1000;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto dB = brownian_increments(n, 1.0, 40 + s);
        const PathGrid r = simulate_rough_cir(p, RoughForm::fractional, dB);
        const PathGrid x = simulate_cir(c, dB, 1.0);
        for (std::size_t k = 0; k <= n; ++k) worst = std::max(worst, std::abs(r.values[k] - x.values[k]));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("rough Heston output and mixing") {
    auto p = rough_params_from_micro(heavy_spec(), AsymptoticSequence::heavy(0.6, 1.0, 1.0));
    const RoughCirScheme scheme(generic_rough_cir(p), RoughForm::fractional, 512);
    const auto a = simulate_rough_heston(p, scheme, 11);
    const auto b = simulate_rough_heston(p, scheme, 11);
    CHECK(a.price.values == b.price.values);
    CHECK(a.variance.size() == 513);
    CHECK(*std::min_element(a.variance.values.begin(), a.variance.values.end()) >= 0.0);

    std::vector<double> ends;
    for (std::uint64_t s = 0; s < 300; ++s) ends.push_back(simulate_rough_heston(p, scheme, 200 + s).price.values.back());
    CHECK(std::abs(mean(ends)) < 4.0 * stderr_of(ends));
}

TEST_CASE("rough CIR preconditions") {
    CHECK_THROWS_AS(RoughCirScheme({1.0, 1.0, 1.0, 0.5}, RoughForm::fractional, 10), Error);
    CHECK_THROWS_AS(RoughCirScheme({1.0, 1.0, 1.0, 1.0}, RoughForm::fractional, 10), Error);
    CHECK_THROWS_AS(RoughCirScheme({0.0, 1.0, 1.0, 0.6}, RoughForm::fractional, 10), Error);
    CHECK_THROWS_AS(RoughCirScheme({1.0, 1.0, 1.0, 0.6}, RoughForm::fractional, 0), Error);
    const RoughCirScheme s({1.0, 1.0, 1.0, 0.6}, RoughForm::mittag_leffler, 8);
    CHECK_THROWS_AS(s.solve(std::vector<double>(7, 0.0)), Error);
    CHECK_THROWS_AS(aggregate_increments(std::vector<double>(7, 0.0), 2), Error);
    CHECK(rough_form_from_string("mittag-leffler") == RoughForm::mittag_leffler);
    CHECK_THROWS_AS(rough_form_from_string("riemann"), Error);
}
