#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "microvol/error.hpp"
#include "microvol/hawkes.hpp"

namespace microvol {

namespace {

double power_kernel(double alpha, double x) { return alpha * std::exp(-(1.0 + alpha) * std::log1p(x)); }

double soe_value(const std::vector<ExpComponent>& terms, double x) {
    double s = 0.0;
    for (const auto& c : terms) s += c.coefficient * std::exp(-c.rate * x);
    return s;
}

std::vector<double> check_grid(double horizon) {
    std::vector<double> xs{0.0};
    const int n = 2000;
    const double lo = std::log(1e-4);
    const double hi = std::log(horizon);
    for (int i = 0; i <= n; ++i) xs.push_back(std::exp(lo + (hi - lo) * i / n));
    return xs;
}

double sup_error(double alpha, const std::vector<ExpComponent>& terms, const std::vector<double>& xs) {
    double e = 0.0;
    for (double x : xs) e = std::max(e, std::abs(soe_value(terms, x) - power_kernel(alpha, x)));
    return e;
}

}  // namespace

SoeFit fit_power_law_soe(double alpha, double horizon, std::size_t terms) {
    if (!(alpha > 0.0)) throw Error("power-law exponent must be positive");
    if (!(horizon > 0.0)) throw Error("fit horizon must be positive");
    if (terms < 4) throw Error("at least 4 exponential terms are required");

    // alpha (1 + x)^-(1 + alpha) = (1 / Gamma(alpha)) int_0^inf s^alpha e^-s e^-sx ds.
    // With s = e^u the integrand decays double-exponentially, so a trapezoid rule
    // in u converges fast.
    const double u_lo = std::log(1e-3 / std::max(horizon, 1.0));
    const double u_hi = std::log(45.0);
    const double du = (u_hi - u_lo) / static_cast<double>(terms - 1);
    const double norm = 1.0 / std::tgamma(alpha);

    SoeFit fit;
    fit.alpha = alpha;
    fit.horizon = horizon;
    for (std::size_t k = 0; k < terms; ++k) {
        const double u = u_lo + du * static_cast<double>(k);
        const double s = std::exp(u);
        const double w = (k == 0 || k + 1 == terms) ? 0.5 * du : du;
        fit.terms.push_back({w * norm * std::exp((alpha + 1.0) * u - s), s});
    }
    const auto xs = check_grid(horizon);
    fit.sup_error = sup_error(alpha, fit.terms, xs);

    // Least-squares polish of the amplitudes with the rates held fixed, relative
    // to the kernel value. Kept only if every amplitude stays nonnegative and the
    // sup error improves.
    Eigen::MatrixXd A(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(terms));
    Eigen::VectorXd b(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double g = power_kernel(alpha, xs[i]);
        b(static_cast<Eigen::Index>(i)) = 1.0;
        for (std::size_t k = 0; k < terms; ++k)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = std::exp(-fit.terms[k].rate * xs[i]) / g;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    if ((c.array() >= 0.0).all() && c.allFinite()) {
        std::vector<ExpComponent> refined = fit.terms;
        for (std::size_t k = 0; k < terms; ++k) refined[k].coefficient = c(static_cast<Eigen::Index>(k));
        const double e = sup_error(alpha, refined, xs);
        if (e < fit.sup_error) {
            fit.terms = std::move(refined);
            fit.sup_error = e;
            fit.least_squares_refined = true;
        }
    }
    return fit;
}

}  // namespace microvol
