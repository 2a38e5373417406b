#pragma once

// Macroscopic limits of the price model: Heston (light tail) and rough Heston
// (heavy tail), their parameter maps, and the two rough CIR formulations.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "microvol/kernels.hpp"
#include "microvol/path.hpp"

namespace microvol {

struct HestonParams {
    double kappa = 0.0;
    double theta = 0.0;
    double xi = 0.0;
    double rho = 0.0;
    double price_scale = 0.0;
    double x0 = 0.0;
};

struct RoughHestonParams {
    double alpha = 0.0;
    double lambda_eff = 0.0;
    double theta = 0.0;
    /// Full coefficient in front of (1/Gamma(alpha)) int (t-s)^(alpha-1) sqrt(Y) dB.
    double nu = 0.0;
    double rho = 0.0;
    /// Brownian mixing weight: B = (B1 + beta B2) / sqrt(1 + beta^2), W = (B1 - B2) / sqrt(2).
    double beta = 1.0;
    double price_scale = 0.0;
    double y0 = 0.0;
};

/// V = (1/Gamma(a)) int (t-s)^(a-1) lambda (theta - V) ds + (lambda nu / Gamma(a)) int (t-s)^(a-1) sqrt(V) dB
///   = theta F^{a,lambda}(t) + nu int f^{a,lambda}(t-s) sqrt(V) dB.
struct GenericRoughCirParams {
    double lambda = 1.0;
    double theta = 1.0;
    double nu = 1.0;
    double alpha = 0.6;
};

/// (1 - beta) / sqrt(2 (1 + beta^2)).
double leverage_rho(double beta);
/// 1 / (1 - (|phi1| - |phi2|)) * sqrt(2 / (1 + beta)).
double limit_price_scale(const KernelMatrixSpec& spec);

HestonParams heston_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq,
                                      const SpectralData& spectral);
HestonParams heston_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq);

RoughHestonParams rough_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq,
                                          const SpectralData& spectral);
RoughHestonParams rough_params_from_micro(const KernelMatrixSpec& spec, const AsymptoticSequence& seq);

/// The generic rough CIR solved by the rough Heston variance.
GenericRoughCirParams generic_rough_cir(const RoughHestonParams& p);

nlohmann::json to_json(const HestonParams& p);
nlohmann::json to_json(const RoughHestonParams& p);
nlohmann::json to_json(const GenericRoughCirParams& p);

struct CirParams {
    double kappa = 1.0;
    double theta = 1.0;
    double xi = 1.0;
    double x0 = 0.0;
};

inline CirParams cir_part(const HestonParams& p) { return {p.kappa, p.theta, p.xi, p.x0}; }

/// Standard normal increments sqrt(h) Z for `steps` cells.
std::vector<double> brownian_increments(std::size_t steps, double horizon, std::uint64_t seed);

/// Full-truncation Euler X_{k+1} = X_k + kappa (theta - X_k^+) h + xi sqrt(X_k^+) dB_k; output max(X, 0).
/// `increments.size()` sets the number of steps; the step must not exceed 1e-2.
PathGrid simulate_cir(const CirParams& p, const std::vector<double>& increments, double horizon);
PathGrid simulate_cir(const CirParams& p, double step, double horizon, std::uint64_t seed);

struct PriceVariancePaths {
    PathGrid price;
    PathGrid variance;
};

/// W = rho B + sqrt(1 - rho^2) B_perp with B driving the variance.
PriceVariancePaths simulate_heston(const HestonParams& p, double step, double horizon, std::uint64_t seed);
PriceVariancePaths simulate_heston(const HestonParams& p, const std::vector<double>& dB,
                                   const std::vector<double>& dB_perp, double horizon);

enum class RoughForm { fractional, mittag_leffler };

std::string to_string(RoughForm form);
RoughForm rough_form_from_string(const std::string& name);

/// Precomputed convolution weights for one (params, steps, horizon) triple, so
/// that ensembles do not redo the Mittag-Leffler quadratures.
class RoughCirScheme {
public:
    RoughCirScheme(const GenericRoughCirParams& p, RoughForm form, std::size_t steps, double horizon = 1.0);

    const GenericRoughCirParams& params() const noexcept { return params_; }
    RoughForm form() const noexcept { return form_; }
    std::size_t steps() const noexcept { return steps_; }
    double horizon() const noexcept { return horizon_; }

    /// Solves on the grid driven by the given Brownian increments.
    PathGrid solve(const std::vector<double>& dB) const;

private:
    GenericRoughCirParams params_;
    RoughForm form_;
    std::size_t steps_;
    double horizon_;
    // fractional: drift and noise weights per lag; mittag-leffler: theta F(t_n) and noise weights.
    std::vector<double> drift_w_;
    std::vector<double> noise_w_;
    std::vector<double> forcing_;
};

PathGrid simulate_rough_cir(const GenericRoughCirParams& p, RoughForm form, const std::vector<double>& dB,
                            double horizon = 1.0);
PathGrid simulate_rough_cir(const GenericRoughCirParams& p, RoughForm form, std::size_t steps, std::uint64_t seed,
                            double horizon = 1.0);

/// Coarse increments obtained by summing consecutive blocks of `factor` fine increments.
std::vector<double> aggregate_increments(const std::vector<double>& fine, std::size_t factor);

inline constexpr std::size_t kRoughDefaultSteps = 4096;

PriceVariancePaths simulate_rough_heston(const RoughHestonParams& p, std::size_t steps, std::uint64_t seed,
                                         RoughForm form = RoughForm::fractional, double horizon = 1.0);
PriceVariancePaths simulate_rough_heston(const RoughHestonParams& p, const RoughCirScheme& scheme,
                                         std::uint64_t seed);

}  // namespace microvol
