#include <doctest.h>

#include <cmath>

#include "microvol/error.hpp"
#include "microvol/experiment.hpp"
#include "microvol/resolvent.hpp"

using namespace microvol;

TEST_CASE("a = 0 gives a zero resolvent") {
    const auto k = build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), 3.0);
    const auto psi = resolvent_psi(k, 0.0, 0.01, 50);
    for (const auto& m : psi.values)
        for (const auto& row : m)
            for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("scalar exponential resolvent matches the geometric closed form") {
    // psi = a c g exp(-g (1 - a c) x) for kernel c g exp(-g x)
    const double a = 0.9, h = 1e-3;
    const auto psi = resolvent_scalar([](double x) { return std::exp(-x); }, a, h, 5001);
    double worst = 0.0;
    for (std::size_t n = 0; n < psi.size(); ++n)
        worst = std::max(worst, std::abs(psi[n] - a * std::exp(-(1.0 - a) * h * n)));
    CHECK(worst < 1e-6);
}

TEST_CASE("trapezoid error is second order") {
    const double a = 0.8;
    auto err = [&](double h) {
        const auto n = static_cast<std::size_t>(std::llround(2.0 / h)) + 1;
        const auto psi = resolvent_scalar([](double x) { return 2.0 * std::exp(-2.0 * x); }, a, h, n);
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            w = std::max(w, std::abs(psi[i] - 2.0 * a * std::exp(-2.0 * (1.0 - a) * h * i)));
        return w;
    };
    const double r = err(0.02) / err(0.01);
    CHECK(r > 3.5);
    CHECK(r < 4.5);
}

TEST_CASE("matrix resolvent vs spectral closed form and Wiener-Hopf residual") {
    const auto k = build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), 3.0);
    for (double a : {0.5, 0.9, 0.998}) {
        const auto err = resolvent_closed_form_error(k, a, 1e-3, 2001);
        REQUIRE(err.has_value());
        CHECK(*err < 1e-6);
        const auto psi = resolvent_psi(k, a, 1e-2, 501);
        CHECK(wiener_hopf_residual(psi, k) < 1e-8);
    }
}

TEST_CASE("closed form is only offered for a single shared rate") {
    const auto k = build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 2.0), 3.0);
    CHECK_FALSE(resolvent_closed_form_error(k, 0.5, 1e-2, 11).has_value());
}

TEST_CASE("norm of the lambda1 resolvent approaches a / (1 - a)") {
    const double a = 0.9;
    const double h = 5e-3;
    // rate-1 exponential, norm 1: resolvent norm is the geometric sum a / (1 - a)
    const auto psi = resolvent_scalar([](double x) { return std::exp(-x); }, a, h, 40001);
    double norm = 0.0;
    for (std::size_t i = 0; i + 1 < psi.size(); ++i) norm += 0.5 * h * (psi[i] + psi[i + 1]);
    CHECK(norm == doctest::Approx(a / (1.0 - a)).epsilon(0.01));
}

TEST_CASE("power-law resolvent satisfies Wiener-Hopf on the grid") {
    const auto k = build_kernel_matrix(KernelFunction::shifted_power_law(0.4, 0.6),
                                       KernelFunction::shifted_power_law(0.2, 0.6), 3.0);
    const auto psi = resolvent_psi(k, 0.95, 1e-2, 401);
    CHECK(wiener_hopf_residual(psi, k) < 1e-8);
}

TEST_CASE("resolvent preconditions") {
    const auto k = build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), 3.0);
    CHECK_THROWS_AS(resolvent_psi(k, 1.0, 0.01, 10), Error);
    CHECK_THROWS_AS(resolvent_psi(k, 0.5, 0.0, 10), Error);
    CHECK_THROWS_AS(resolvent_scalar([](double) { return 1.0; }, -0.1, 0.01, 10), Error);
}
