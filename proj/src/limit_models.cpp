#include "microvol/limit_models.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "microvol/error.hpp"
#include "microvol/rng.hpp"
#include "microvol/special_functions.hpp"

namespace microvol {

double leverage_rho(double beta) { return (1.0 - beta) / std::sqrt(2.0 * (1.0 + beta * beta)); }

double limit_price_scale(const KernelMatrixSpec& spec) {
    const double gap = 1.0 - (spec.phi1().weight() - spec.phi2().weight());
    if (!(gap > 0.0)) throw Error("1 - (|phi1| - |phi2|) must be positive");
    return std::sqrt(2.0 / (1.0 + spec.beta())) / gap;
}

HestonParams heston_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq,
                                      const SpectralData& spectral) {
    if (seq.regime() != Regime::light) throw Error("Heston parameters need a light-tail sequence");
    const double m = spectral.m;
    if (!(m > 0.0) || !std::isfinite(m)) throw Error("Heston parameters need a finite positive first moment m");
    const double beta = spec.beta();
    HestonParams p;
    p.kappa = seq.lambda() / m;
    p.theta = (beta + 1.0) * seq.mu() / seq.lambda();
    p.xi = std::sqrt((1.0 + beta * beta) / (1.0 + beta)) / m;
    p.rho = leverage_rho(beta);
    p.price_scale = limit_price_scale(spec);
    return p;
}

HestonParams heston_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq) {
    return heston_params_from_micro(spec, seq, eigen_structure(spec, Regime::light));
}

RoughHestonParams rough_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq,
                                          const SpectralData& spectral) {
    if (seq.regime() != Regime::heavy) throw Error("rough Heston parameters need a heavy-tail sequence");
    const double alpha = seq.alpha();
    if (!(alpha > 0.5 && alpha < 1.0)) throw Error("rough Heston needs alpha in (1/2, 1)");
    const double c = spectral.tail_c;
    if (!(c > 0.0)) throw Error("rough Heston parameters need a positive tail constant C");
    const double beta = spec.beta();
    const double ls = seq.lambda();
    RoughHestonParams p;
    p.alpha = alpha;
    p.lambda_eff = alpha * ls / (c * std::tgamma(1.0 - alpha));
    p.theta = 1.0 + beta;
    p.nu = p.lambda_eff * std::sqrt((1.0 + beta * beta) / (ls * seq.mu() * (1.0 + beta)));
    p.rho = leverage_rho(beta);
    p.beta = beta;
    p.price_scale = limit_price_scale(spec);
    return p;
}

RoughHestonParams rough_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq) {
    return rough_params_from_micro(spec, seq, eigen_structure(spec, Regime::heavy));
}

GenericRoughCirParams generic_rough_cir(const RoughHestonParams& p) {
    return {p.lambda_eff, p.theta, p.nu / p.lambda_eff, p.alpha};
}

nlohmann::json to_json(const HestonParams& p) {
    return {{"model", "heston"}, {"kappa", p.kappa}, {"theta", p.theta}, {"xi", p.xi},
            {"rho", p.rho},      {"price_scale", p.price_scale}, {"x0", p.x0}};
}

nlohmann::json to_json(const RoughHestonParams& p) {
    return {{"model", "rough-heston"}, {"alpha", p.alpha}, {"lambda_eff", p.lambda_eff},
            {"theta", p.theta},        {"nu", p.nu},       {"rho", p.rho},
            {"beta", p.beta},          {"price_scale", p.price_scale}, {"y0", p.y0}};
}

nlohmann::json to_json(const GenericRoughCirParams& p) {
    return {{"lambda", p.lambda}, {"theta", p.theta}, {"nu", p.nu}, {"alpha", p.alpha}};
}

std::vector<double> brownian_increments(std::size_t steps, double horizon, std::uint64_t seed) {
    if (steps == 0) throw Error("need at least one step");
    const double sh = std::sqrt(horizon / static_cast<double>(steps));
    Rng rng(seed);
    std::vector<double> out(steps);
    for (double& x : out) x = sh * rng.normal();
    return out;
}

namespace {

std::size_t steps_for(double step, double horizon) {
    if (!(step > 0.0) || !(horizon > 0.0)) throw Error("step and horizon must be positive");
    const double n = std::round(horizon / step);
    if (n < 1.0 || std::abs(n * step - horizon) > 1e-9 * horizon)
        throw Error("horizon must be an integer multiple of the step");
    return static_cast<std::size_t>(n);
}

void check_cir_step(double h) {
    if (h > 1e-2 * (1.0 + 1e-12)) throw Error("CIR Euler step must not exceed 1e-2");
}

}  // namespace

PathGrid simulate_cir(const CirParams& p, const std::vector<double>& increments, double horizon) {
    if (increments.empty()) throw Error("need at least one increment");
    if (!(horizon > 0.0)) throw Error("horizon must be positive");
    const std::size_t n = increments.size();
    const double h = horizon / static_cast<double>(n);
    check_cir_step(h);
    PathGrid out;
    out.times = uniform_times(n + 1, 0.0, horizon);
    out.values.resize(n + 1);
    double x = p.x0;
    out.values[0] = std::max(x, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double xp = std::max(x, 0.0);
        x += p.kappa * (p.theta - xp) * h + p.xi * std::sqrt(xp) * increments[k];
        out.values[k + 1] = std::max(x, 0.0);
    }
    return out;
}

PathGrid simulate_cir(const CirParams& p, double step, double horizon, std::uint64_t seed) {
    const std::size_t n = steps_for(step, horizon);
    check_cir_step(horizon / static_cast<double>(n));
    return simulate_cir(p, brownian_increments(n, horizon, seed), horizon);
}

PriceVariancePaths simulate_heston(const HestonParams& p, const std::vector<double>& dB,
                                   const std::vector<double>& dB_perp, double horizon) {
    if (dB.size() != dB_perp.size()) throw Error("Brownian increment vectors differ in length");
    PriceVariancePaths out;
    out.variance = simulate_cir(cir_part(p), dB, horizon);
    const double c = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    out.price.times = out.variance.times;
    out.price.values.assign(dB.size() + 1, 0.0);
    for (std::size_t k = 0; k < dB.size(); ++k) {
        const double dw = p.rho * dB[k] + c * dB_perp[k];
        out.price.values[k + 1] = out.price.values[k] + p.price_scale * std::sqrt(out.variance.values[k]) * dw;
    }
    return out;
}

PriceVariancePaths simulate_heston(const HestonParams& p, double step, double horizon, std::uint64_t seed) {
    const std::size_t n = steps_for(step, horizon);
    const double sh = std::sqrt(horizon / static_cast<double>(n));
    Rng rng(seed);
    std::vector<double> dB(n);
    std::vector<double> dP(n);
    for (std::size_t k = 0; k < n; ++k) {
        dB[k] = sh * rng.normal();
        dP[k] = sh * rng.normal();
    }
    return simulate_heston(p, dB, dP, horizon);
}

std::string to_string(RoughForm form) {
    return form == RoughForm::fractional ? "fractional" : "mittag-leffler";
}

RoughForm rough_form_from_string(const std::string& name) {
    if (name == "fractional") return RoughForm::fractional;
    if (name == "mittag-leffler") return RoughForm::mittag_leffler;
    throw Error("unknown rough form '" + name + "' (expected fractional or mittag-leffler)");
}

RoughCirScheme::RoughCirScheme(const GenericRoughCirParams& p, RoughForm form, std::size_t steps, double horizon)
    : params_(p), form_(form), steps_(steps), horizon_(horizon) {
    if (!(p.alpha > 0.5 && p.alpha < 1.0)) throw Error("rough CIR needs alpha in (1/2, 1)");
    if (!(p.lambda > 0.0) || !(p.theta >= 0.0) || !(p.nu >= 0.0))
        throw Error("rough CIR needs lambda > 0, theta >= 0, nu >= 0");
    if (steps < 1) throw Error("rough CIR needs at least one step");
    if (!(horizon > 0.0)) throw Error("horizon must be positive");

    const double a = p.alpha;
    const double h = horizon / static_cast<double>(steps);
    drift_w_.assign(steps + 1, 0.0);
    noise_w_.assign(steps + 1, 0.0);
    // Drift weights integrate the kernel over each cell. Noise weights are cell RMS values,
    // sqrt((1/h) int_cell K^2), so each weight carries the exact Ito variance of its cell.
    // Cell averages lose variance next to the singularity and bias the small-lag scaling upward.
    if (form == RoughForm::fractional) {
        const double c = std::pow(h, a) / (a * std::tgamma(a));
        const double cn = std::pow(h, a - 1.0) / std::tgamma(a);
        const double e = 2.0 * a - 1.0;
        for (std::size_t j = 1; j <= steps; ++j) {
            const double jd = static_cast<double>(j);
            drift_w_[j] = p.lambda * c * (std::pow(jd, a) - std::pow(jd - 1.0, a));
            noise_w_[j] = p.lambda * p.nu * cn * std::sqrt((std::pow(jd, e) - std::pow(jd - 1.0, e)) / e);
        }
        return;
    }
    forcing_.assign(steps + 1, 0.0);
    const auto f2 = [&](double s) {
        const double f = ml_density(a, p.lambda, s);
        return f * f;
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    for (std::size_t j = 1; j <= steps; ++j) {
        const double lo = h * static_cast<double>(j - 1);
        const double hi = h * static_cast<double>(j);
        // The first cell holds the s^(2a-2) singularity.
        const double mass = j == 1 ? ts.integrate(f2, lo, hi)
                                   : boost::math::quadrature::gauss<double, 20>::integrate(f2, lo, hi);
        forcing_[j] = p.theta * ml_cdf(a, p.lambda, hi);
        noise_w_[j] = p.nu * std::sqrt(mass / h);
    }
}

PathGrid RoughCirScheme::solve(const std::vector<double>& dB) const {
    if (dB.size() != steps_) throw Error("increment count does not match the scheme's step count");
    const std::size_t n = steps_;
    std::vector<double> v(n + 1, 0.0);
    std::vector<double> sq(n, 0.0);  // sqrt(V_k^+) dB_k
    std::vector<double> pos(n, 0.0); // V_k^+
    const double theta = params_.theta;
    for (std::size_t m = 1; m <= n; ++m) {
        const std::size_t k0 = m - 1;
        pos[k0] = std::max(v[k0], 0.0);
        sq[k0] = std::sqrt(pos[k0]) * dB[k0];
        double acc = 0.0;
        if (form_ == RoughForm::fractional) {
            // Drift is linear in V; only the square root sees the positive part.
            for (std::size_t k = 0; k < m; ++k) acc += drift_w_[m - k] * (theta - v[k]) + noise_w_[m - k] * sq[k];
        } else {
            acc = forcing_[m];
            for (std::size_t k = 0; k < m; ++k) acc += noise_w_[m - k] * sq[k];
        }
        v[m] = acc;
    }
    PathGrid out;
    out.times = uniform_times(n + 1, 0.0, horizon_);
    out.values.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.values[i] = std::max(v[i], 0.0);
    return out;
}

PathGrid simulate_rough_cir(const GenericRoughCirParams& p, RoughForm form, const std::vector<double>& dB,
                            double horizon) {
    return RoughCirScheme(p, form, dB.size(), horizon).solve(dB);
}

PathGrid simulate_rough_cir(const GenericRoughCirParams& p, RoughForm form, std::size_t steps, std::uint64_t seed,
                            double horizon) {
    return simulate_rough_cir(p, form, brownian_increments(steps, horizon, seed), horizon);
}

std::vector<double> aggregate_increments(const std::vector<double>& fine, std::size_t factor) {
    if (factor == 0 || fine.size() % factor != 0) throw Error("increment count must be divisible by the factor");
    std::vector<double> out(fine.size() / factor, 0.0);
    for (std::size_t i = 0; i < fine.size(); ++i) out[i / factor] += fine[i];
    return out;
}

PriceVariancePaths simulate_rough_heston(const RoughHestonParams& p, const RoughCirScheme& scheme,
                                         std::uint64_t seed) {
    const std::size_t n = scheme.steps();
    const double sh = std::sqrt(scheme.horizon() / static_cast<double>(n));
    const double nb = std::sqrt(1.0 + p.beta * p.beta);
    Rng rng(seed);
    std::vector<double> dB(n);
    std::vector<double> dW(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double b1 = sh * rng.normal();
        const double b2 = sh * rng.normal();
        dB[k] = (b1 + p.beta * b2) / nb;
        dW[k] = (b1 - b2) / std::sqrt(2.0);
    }
    PriceVariancePaths out;
    out.variance = scheme.solve(dB);
    out.price.times = out.variance.times;
    out.price.values.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        out.price.values[k + 1] = out.price.values[k] + p.price_scale * std::sqrt(out.variance.values[k]) * dW[k];
    return out;
}

PriceVariancePaths simulate_rough_heston(const RoughHestonParams& p, std::size_t steps, std::uint64_t seed,
                                         RoughForm form, double horizon) {
    return simulate_rough_heston(p, RoughCirScheme(generic_rough_cir(p), form, steps, horizon), seed);
}

}  // namespace microvol
