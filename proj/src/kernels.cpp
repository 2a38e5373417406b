#include "microvol/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "microvol/error.hpp"

namespace microvol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(std::string(what) + " must be finite");
}

}  // namespace

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::exponential_mixture: return "exponential-mixture";
        case KernelFamily::shifted_power_law: return "shifted-power-law";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "exponential-mixture" || name == "exponential") return KernelFamily::exponential_mixture;
    if (name == "shifted-power-law") return KernelFamily::shifted_power_law;
    throw Error("unknown kernel family '" + name + "'");
}

KernelFunction KernelFunction::exponential(double weight, double rate) {
    return exponential_mixture(weight, {{1.0, rate}});
}

KernelFunction KernelFunction::exponential_mixture(double weight, std::vector<ExpComponent> components) {
    require_finite(weight, "kernel weight");
    if (weight < 0.0) throw Error("kernel weight must be nonnegative");
    if (components.empty()) throw Error("exponential mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
        require_finite(c.coefficient, "mixture coefficient");
        require_finite(c.rate, "mixture rate");
        if (c.rate <= 0.0) throw Error("mixture rates must be positive");
        if (c.coefficient < 0.0) throw Error("mixture coefficients must be nonnegative");
        total += c.coefficient;
    }
    if (total <= 0.0) throw Error("mixture coefficients sum to zero");

    // Merge equal rates so downstream Markov states stay minimal.
    std::sort(components.begin(), components.end(),
              [](const ExpComponent& a, const ExpComponent& b) { return a.rate < b.rate; });
    std::vector<ExpComponent> merged;
    for (const auto& c : components) {
        if (!merged.empty() && merged.back().rate == c.rate) {
            merged.back().coefficient += c.coefficient / total;
        } else {
            merged.push_back({c.coefficient / total, c.rate});
        }
    }

    KernelFunction k;
    k.family_ = KernelFamily::exponential_mixture;
    k.weight_ = weight;
    k.components_ = std::move(merged);
    return k;
}

KernelFunction KernelFunction::shifted_power_law(double weight, double alpha) {
    require_finite(weight, "kernel weight");
    require_finite(alpha, "power-law exponent");
    if (weight < 0.0) throw Error("kernel weight must be nonnegative");
    KernelFunction k;
    k.family_ = KernelFamily::shifted_power_law;
    k.weight_ = weight;
    k.alpha_ = alpha;
    return k;
}

double KernelFunction::operator()(double x) const {
    if (x < 0.0) return 0.0;
    if (family_ == KernelFamily::exponential_mixture) {
        double s = 0.0;
        for (const auto& c : components_) s += c.coefficient * c.rate * std::exp(-c.rate * x);
        return weight_ * s;
    }
    return weight_ * alpha_ * std::exp(-(1.0 + alpha_) * std::log1p(x));
}

double KernelFunction::cumulative(double x) const {
    if (x <= 0.0) return 0.0;
    if (family_ == KernelFamily::exponential_mixture) {
        double s = 0.0;
        for (const auto& c : components_) s += c.coefficient * -std::expm1(-c.rate * x);
        return weight_ * s;
    }
    return weight_ * -std::expm1(-alpha_ * std::log1p(x));
}

double KernelFunction::tail(double x) const {
    if (x <= 0.0) return l1_norm(*this);
    if (family_ == KernelFamily::exponential_mixture) {
        double s = 0.0;
        for (const auto& c : components_) s += c.coefficient * std::exp(-c.rate * x);
        return weight_ * s;
    }
    if (alpha_ <= 0.0) return kInf;
    return weight_ * std::exp(-alpha_ * std::log1p(x));
}

double KernelFunction::first_moment() const {
    if (family_ == KernelFamily::exponential_mixture) {
        double s = 0.0;
        for (const auto& c : components_) s += c.coefficient / c.rate;
        return weight_ * s;
    }
    // E[X] for the density alpha (1+x)^-(1+alpha) is 1 / (alpha - 1).
    if (weight_ == 0.0) return 0.0;
    return alpha_ > 1.0 ? weight_ / (alpha_ - 1.0) : kInf;
}

KernelFunction KernelFunction::scaled(double factor) const {
    if (factor < 0.0) throw Error("kernel scale factor must be nonnegative");
    KernelFunction k = *this;
    k.weight_ *= factor;
    return k;
}

KernelFunction KernelFunction::combine(double a, const KernelFunction& f, double b, const KernelFunction& g) {
    if (a < 0.0 || b < 0.0) throw Error("kernel combination weights must be nonnegative");
    if (f.family_ != g.family_) throw Error("cannot combine kernels of different families");
    const double w = a * f.weight_ + b * g.weight_;
    if (f.family_ == KernelFamily::shifted_power_law) {
        if (f.alpha_ != g.alpha_) throw Error("cannot combine power laws with different exponents");
        return shifted_power_law(w, f.alpha_);
    }
    if (w == 0.0) return exponential_mixture(0.0, f.components_);
    std::vector<ExpComponent> parts;
    for (const auto& c : f.components_) parts.push_back({a * f.weight_ * c.coefficient, c.rate});
    for (const auto& c : g.components_) parts.push_back({b * g.weight_ * c.coefficient, c.rate});
    // drop zero-weight parts so the rate set reflects actual contributions
    std::erase_if(parts, [](const ExpComponent& c) { return c.coefficient == 0.0; });
    return exponential_mixture(w, std::move(parts));
}

double l1_norm(const KernelFunction& k) {
    if (k.family() == KernelFamily::shifted_power_law && k.alpha() <= 0.0) {
        std::ostringstream os;
        os << "power-law kernel with exponent " << k.alpha() << " has a divergent integral";
        throw Error(os.str());
    }
    if (k.family() == KernelFamily::exponential_mixture) {
        double s = 0.0;
        for (const auto& c : k.components()) s += c.coefficient;
        return k.weight() * s;
    }
    return k.weight();
}

double l1_norm_quadrature(const KernelFunction& k) {
    if (k.family() == KernelFamily::shifted_power_law && k.alpha() <= 0.0) {
        throw Error("power-law kernel has a divergent integral");
    }
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&k](double x) { return k(x); };
    double err = 0.0;
    return gauss_kronrod<double, 61>::integrate(f, 0.0, kInf, 20, 1e-14, &err);
}

KernelMatrixSpec::KernelMatrixSpec(KernelFunction phi1, KernelFunction phi2, double beta)
    : phi1_(std::move(phi1)), phi2_(std::move(phi2)), beta_(beta) {
    require_finite(beta, "beta");
    if (beta < 1.0) throw Error("beta must be >= 1");
    if (phi1_.family() != phi2_.family()) throw Error("phi1 and phi2 must share a kernel family");
    if (phi1_.family() == KernelFamily::shifted_power_law && phi1_.alpha() != phi2_.alpha()) {
        throw Error("phi1 and phi2 power laws must share the tail exponent");
    }
}

KernelFunction KernelMatrixSpec::entry(int i, int j) const {
    if (i == 0 && j == 0) return phi1_;
    if (i == 0 && j == 1) return phi2_.scaled(beta_);
    if (i == 1 && j == 0) return phi2_;
    return KernelFunction::combine(1.0, phi1_, beta_ - 1.0, phi2_);
}

Matrix2 KernelMatrixSpec::at(double x) const {
    const double p1 = phi1_(x);
    const double p2 = phi2_(x);
    return {{{p1, beta_ * p2}, {p2, p1 + (beta_ - 1.0) * p2}}};
}

Matrix2 KernelMatrixSpec::integral() const {
    const double n1 = l1_norm(phi1_);
    const double n2 = l1_norm(phi2_);
    return {{{n1, beta_ * n2}, {n2, n1 + (beta_ - 1.0) * n2}}};
}

double KernelMatrixSpec::spectral_radius() const {
    const Matrix2 m = integral();
    const double tr = m[0][0] + m[1][1];
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return std::max(std::abs(tr / 2.0 + disc), std::abs(tr / 2.0 - disc));
}

double KernelMatrixSpec::criticality_residual() const {
    return std::abs(l1_norm(phi1_) + beta_ * l1_norm(phi2_) - 1.0);
}

KernelMatrixSpec build_kernel_matrix(KernelFunction phi1, KernelFunction phi2, double beta, double tolerance) {
    KernelMatrixSpec spec(std::move(phi1), std::move(phi2), beta);
    const double residual = spec.criticality_residual();
    if (!(residual <= tolerance)) {
        std::ostringstream os;
        os << "kernel matrix is not critical: |‖phi1‖ + beta ‖phi2‖ - 1| = " << residual
           << " exceeds tolerance " << tolerance;
        throw Error(os.str());
    }
    return spec;
}

std::string to_string(Regime regime) { return regime == Regime::light ? "light" : "heavy"; }

Regime regime_from_string(const std::string& name) {
    if (name == "light") return Regime::light;
    if (name == "heavy") return Regime::heavy;
    throw Error("unknown regime '" + name + "' (expected light or heavy)");
}

AsymptoticSequence AsymptoticSequence::light(double lambda, double mu) {
    require_finite(lambda, "lambda");
    require_finite(mu, "mu");
    if (lambda <= 0.0 || mu <= 0.0) throw Error("light sequence needs lambda > 0 and mu > 0");
    AsymptoticSequence s;
    s.regime_ = Regime::light;
    s.lambda_ = lambda;
    s.alpha_ = 1.0;
    s.mu_ = mu;
    return s;
}

AsymptoticSequence AsymptoticSequence::heavy(double alpha, double lambda_star, double mu) {
    require_finite(alpha, "alpha");
    require_finite(lambda_star, "lambda_star");
    require_finite(mu, "mu");
    if (!(alpha > 0.5 && alpha < 1.0)) throw Error("heavy sequence needs alpha in (1/2, 1)");
    if (lambda_star <= 0.0 || mu <= 0.0) throw Error("heavy sequence needs lambda* > 0 and mu > 0");
    AsymptoticSequence s;
    s.regime_ = Regime::heavy;
    s.lambda_ = lambda_star;
    s.alpha_ = alpha;
    s.mu_ = mu;
    return s;
}

double AsymptoticSequence::min_horizon() const {
    return regime_ == Regime::light ? lambda_ : std::pow(lambda_, 1.0 / alpha_);
}

double AsymptoticSequence::a(double T) const {
    if (!(T > min_horizon())) {
        std::ostringstream os;
        os << "horizon " << T << " is below the minimum " << min_horizon() << " of the sequence";
        throw Error(os.str());
    }
    return regime_ == Regime::light ? 1.0 - lambda_ / T : 1.0 - lambda_ / std::pow(T, alpha_);
}

double AsymptoticSequence::mu_at(double T) const {
    if (!(T > 0.0)) throw Error("horizon must be positive");
    return regime_ == Regime::light ? mu_ : mu_ * std::pow(T, alpha_ - 1.0);
}

SpectralData eigen_structure(const KernelMatrixSpec& spec, Regime regime) {
    const double beta = spec.beta();
    SpectralData d{
        KernelFunction::combine(1.0, spec.phi1(), beta, spec.phi2()),
        SignedKernel{spec.phi1(), spec.phi2()},
        {1.0, beta},
        {1.0, -1.0},
        {1.0 / std::hypot(1.0, beta), beta / std::hypot(1.0, beta)},
    };
    if (regime == Regime::light) {
        d.m = d.lambda1.first_moment();
    } else {
        if (d.lambda1.family() != KernelFamily::shifted_power_law) {
            throw Error("heavy regime requires power-law kernels: the tail constant of an "
                        "exponential kernel is zero");
        }
        d.m = d.lambda1.first_moment();
        d.tail_alpha = d.lambda1.alpha();
        // alpha x^alpha * w (1 + x)^-alpha -> alpha w
        d.tail_c = d.lambda1.alpha() * d.lambda1.weight();
    }
    return d;
}

bool AssumptionReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

const AssumptionCheck& AssumptionReport::get(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw Error("no assumption check named '" + name + "'");
}

AssumptionReport validate_assumptions(const KernelMatrixSpec& spec, const AsymptoticSequence& seq) {
    AssumptionReport report;

    double residual = kInf;
    try {
        residual = spec.criticality_residual();
    } catch (const Error&) {
    }
    {
        std::ostringstream os;
        os << "|‖phi1‖ + beta ‖phi2‖ - 1| = " << residual;
        report.checks.push_back({"criticality", residual <= 1e-6, residual, os.str()});
    }

    const KernelFunction lambda1 = KernelFunction::combine(1.0, spec.phi1(), spec.beta(), spec.phi2());

    // Sufficient condition for a uniformly bounded resolvent: lambda1 non-increasing.
    {
        bool monotone = true;
        double prev = lambda1(0.0);
        double worst = 0.0;
        for (int i = 1; i <= 400; ++i) {
            const double x = 1e-4 * std::pow(10.0, 9.0 * i / 400.0);
            const double v = lambda1(x);
            if (v > prev * (1.0 + 1e-12)) {
                monotone = false;
                worst = std::max(worst, v - prev);
            }
            prev = v;
        }
        report.checks.push_back({"lambda1_non_increasing", monotone, worst,
                                 monotone ? "lambda1 is non-increasing on a log grid"
                                          : "lambda1 increases somewhere on [1e-4, 1e5]"});
    }

    if (seq.regime() == Regime::light) {
        const double m = lambda1.first_moment();
        const bool ok = std::isfinite(m) && m > 0.0;
        report.checks.push_back({"first_moment", ok, m,
                                 ok ? "m = int x lambda1(x) dx is finite" : "first moment of lambda1 diverges"});
    } else {
        const double a = seq.alpha();
        auto g = [&](double x) { return a * std::pow(x, a) * lambda1.tail(x); };
        const double g_lo = g(1e4);
        const double g_hi = g(1e6);
        const double drift = g_hi > 0.0 ? std::abs(g_hi - g_lo) / g_hi : kInf;
        const bool ok = g_hi > 0.0 && drift < 0.01;
        std::ostringstream os;
        os << "alpha x^alpha int_x^inf lambda1: " << g_lo << " at x=1e4, " << g_hi
           << " at x=1e6 (relative drift " << drift << ")";
        report.checks.push_back({"tail_limit", ok, g_hi, os.str()});

        const bool exponent_ok = lambda1.family() == KernelFamily::shifted_power_law && lambda1.alpha() == a;
        report.checks.push_back({"tail_exponent", exponent_ok, lambda1.alpha(),
                                 exponent_ok ? "kernel exponent matches the sequence alpha"
                                             : "kernel exponent differs from the sequence alpha"});
    }

    return report;
}

}  // namespace microvol
