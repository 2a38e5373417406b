#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "microvol/error.hpp"
#include "microvol/kernel_json.hpp"
#include "microvol/kernels.hpp"

using namespace microvol;

namespace {

KernelMatrixSpec exp_spec(double beta = 3.0) {
    return build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), beta);
}

KernelMatrixSpec power_spec() {
    return build_kernel_matrix(KernelFunction::shifted_power_law(0.4, 0.6), KernelFunction::shifted_power_law(0.2, 0.6),
                               3.0);
}

// Independent oracle: Gauss-Kronrod on a finite range plus exp-sinh on the tail.
double integrate_half_line(const std::function<double(double)>& f) {
    using boost::math::quadrature::gauss_kronrod;
    boost::math::quadrature::exp_sinh<double> tail;
    return gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14) + tail.integrate(f, 1.0, INFINITY);
}

}  // namespace

TEST_CASE("l1 norms in closed form") {
    CHECK(l1_norm(KernelFunction::exponential(0.4, 1.0)) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(l1_norm(KernelFunction::shifted_power_law(0.2, 0.6)) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("l1 norm quadrature agrees with the closed form") {
    const auto mix = KernelFunction::exponential_mixture(0.4, {{1.0, 1.0}, {2.0, 3.0}});
    CHECK(std::abs(l1_norm_quadrature(mix) - l1_norm(mix)) < 1e-8);
    const double oracle = integrate_half_line([&](double x) { return mix(x); });
    CHECK(std::abs(oracle - 0.4) < 1e-8);

    const auto pl = KernelFunction::shifted_power_law(0.3, 0.7);
    CHECK(std::abs(l1_norm_quadrature(pl) - 0.3) < 1e-8);
}

TEST_CASE("kernel values, tails and moments") {
    const auto e = KernelFunction::exponential(0.4, 2.0);
    CHECK(e(0.0) == doctest::Approx(0.8));
    CHECK(e(1.0) == doctest::Approx(0.8 * std::exp(-2.0)));
    CHECK(e.tail(1.5) == doctest::Approx(0.4 * std::exp(-3.0)));
    CHECK(e.cumulative(1.5) + e.tail(1.5) == doctest::Approx(0.4));
    CHECK(e.first_moment() == doctest::Approx(0.4 / 2.0));

    const auto p = KernelFunction::shifted_power_law(0.5, 0.6);
    CHECK(p(0.0) == doctest::Approx(0.5 * 0.6));
    CHECK(p(3.0) == doctest::Approx(0.5 * 0.6 * std::pow(4.0, -1.6)));
    CHECK(p.tail(3.0) == doctest::Approx(0.5 * std::pow(4.0, -0.6)));
    CHECK(std::isinf(p.first_moment()));
}

TEST_CASE("kernels are nonnegative and non-increasing") {
    const auto mix = KernelFunction::exponential_mixture(0.7, {{0.3, 0.5}, {1.0, 4.0}});
    const auto pl = KernelFunction::shifted_power_law(0.7, 0.55);
    double prev_m = mix(0.0), prev_p = pl(0.0);
    for (int i = 1; i <= 400; ++i) {
        const double x = 0.05 * i;
        CHECK(mix(x) >= 0.0);
        CHECK(pl(x) >= 0.0);
        CHECK(mix(x) <= prev_m);
        CHECK(pl(x) <= prev_p);
        prev_m = mix(x);
        prev_p = pl(x);
    }
}

TEST_CASE("invalid kernels are rejected") {
    CHECK_THROWS_AS(KernelFunction::exponential(-0.1, 1.0), Error);
    CHECK_THROWS_AS(KernelFunction::exponential(0.1, 0.0), Error);
    CHECK_THROWS_AS(KernelFunction::exponential_mixture(0.1, {}), Error);
    CHECK_THROWS_AS(KernelFunction::exponential_mixture(0.1, {{-1.0, 1.0}}), Error);
    CHECK_THROWS_AS(kernel_family_from_string("gaussian"), Error);
}

TEST_CASE("build_kernel_matrix enforces criticality") {
    const auto k = exp_spec();
    CHECK(k.spectral_radius() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(build_kernel_matrix(KernelFunction::exponential(0.5, 1.0), KernelFunction::exponential(0.5, 1.0), 1.0)
              .spectral_radius() == doctest::Approx(1.0));
    try {
        build_kernel_matrix(KernelFunction::exponential(0.5, 1.0), KernelFunction::exponential(0.5, 1.0), 2.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("0.5") != std::string::npos);
    }
    CHECK_THROWS_AS(
        build_kernel_matrix(KernelFunction::exponential(0.4, 1.0), KernelFunction::exponential(0.2, 1.0), 0.5), Error);
}

TEST_CASE("kernel matrix structure") {
    const auto k = exp_spec();
    const double x = 0.7;
    const auto m = k.at(x);
    const double f1 = k.phi1()(x), f2 = k.phi2()(x);
    CHECK(m[0][0] == doctest::Approx(f1));
    CHECK(m[0][1] == doctest::Approx(3.0 * f2));
    CHECK(m[1][0] == doctest::Approx(f2));
    CHECK(m[1][1] == doctest::Approx(f1 + 2.0 * f2));
    const auto w = k.integral();
    CHECK(w[0][0] + w[0][1] == doctest::Approx(1.0));
    CHECK(k.criticality_residual() < 1e-12);
}

TEST_CASE("eigen structure: left eigenvectors on a grid") {
    for (const auto& k : {exp_spec(), power_spec()}) {
        const auto regime = k.phi1().family() == KernelFamily::shifted_power_law ? Regime::heavy : Regime::light;
        const SpectralData s = eigen_structure(k, regime);
        CHECK(l1_norm(s.lambda1) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(s.v1[0] == 1.0);
        CHECK(s.v1[1] == 3.0);
        CHECK(s.v2[0] == 1.0);
        CHECK(s.v2[1] == -1.0);
        CHECK(s.e1[0] * s.v1[0] + s.e1[1] * s.v1[1] > 0.0);
        CHECK(std::hypot(s.e1[0], s.e1[1]) == doctest::Approx(1.0));
        for (int i = 0; i < 100; ++i) {
            const double t = 0.1 * i;
            const auto m = k.at(t);
            for (int j = 0; j < 2; ++j) {
                const double l1 = s.v1[0] * m[0][j] + s.v1[1] * m[1][j];
                const double l2 = s.v2[0] * m[0][j] + s.v2[1] * m[1][j];
                CHECK(std::abs(l1 - s.lambda1(t) * s.v1[j]) < 1e-10);
                CHECK(std::abs(l2 - s.lambda2(t) * s.v2[j]) < 1e-10);
            }
        }
    }
}

TEST_CASE("light first moment and heavy tail constant") {
    const SpectralData light = eigen_structure(exp_spec(), Regime::light);
    const double m = integrate_half_line([&](double x) { return x * light.lambda1(x); });
    CHECK(light.m == doctest::Approx(m).epsilon(1e-10));
    CHECK(light.m == doctest::Approx(1.0));

    const SpectralData heavy = eigen_structure(power_spec(), Regime::heavy);
    CHECK(heavy.tail_alpha == doctest::Approx(0.6));
    CHECK(heavy.tail_c == doctest::Approx(0.6));
    // alpha x^alpha int_x^inf lambda1 drifts towards C.
    const double x = 1e6;
    const double g = 0.6 * std::pow(x, 0.6) * heavy.lambda1.tail(x);
    CHECK(std::abs(g - heavy.tail_c) / heavy.tail_c < 0.01);

    CHECK_THROWS_AS(eigen_structure(exp_spec(), Regime::heavy), Error);
}

TEST_CASE("asymptotic sequences") {
    const auto l = AsymptoticSequence::light(1.5, 2.0);
    const auto h = AsymptoticSequence::heavy(0.6, 1.0, 1.0);
    for (double T : {10.0, 100.0, 1234.5, 1e5}) {
        CHECK(T * (1.0 - l.a(T)) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(std::pow(T, 0.6) * (1.0 - h.a(T)) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(l.mu_at(T) == 2.0);
        CHECK(h.mu_at(T) == doctest::Approx(std::pow(T, -0.4)));
        CHECK(l.a(T) > 0.0);
        CHECK(l.a(T) < 1.0);
        CHECK(h.a(2 * T) > h.a(T));
    }
    CHECK_THROWS_AS(l.a(1.0), Error);
    CHECK_THROWS_AS(AsymptoticSequence::heavy(0.4, 1.0, 1.0), Error);
    CHECK_THROWS_AS(AsymptoticSequence::light(0.0, 1.0), Error);
    CHECK_THROWS_AS(regime_from_string("medium"), Error);
}

TEST_CASE("assumption validation is advisory") {
    CHECK(validate_assumptions(exp_spec(), AsymptoticSequence::light(1.0, 1.0)).all_passed());
    CHECK(validate_assumptions(power_spec(), AsymptoticSequence::heavy(0.6, 1.0, 1.0)).all_passed());

    const auto bad = validate_assumptions(exp_spec(), AsymptoticSequence::heavy(0.6, 1.0, 1.0));
    CHECK_FALSE(bad.all_passed());

    const auto off = build_kernel_matrix(KernelFunction::exponential(0.38, 1.0), KernelFunction::exponential(0.2, 1.0),
                                         3.0, 0.05);
    const auto rep = validate_assumptions(off, AsymptoticSequence::light(1.0, 1.0));
    CHECK_FALSE(rep.get("criticality").passed);
    CHECK(rep.get("criticality").value == doctest::Approx(0.02));
}

TEST_CASE("model JSON round trip") {
    const ModelSpec m{power_spec(), AsymptoticSequence::heavy(0.6, 1.0, 1.0)};
    const auto j = to_json(m);
    const ModelSpec back = model_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.kernel.phi1().family() == KernelFamily::shifted_power_law);

    auto broken = j;
    broken.erase("beta");
    try {
        model_from_json(broken);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }
}
