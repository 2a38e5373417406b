#pragma once

// Mittag-Leffler functions and densities, Riemann-Liouville fractional
// operators, and exact fractional Brownian motion samples.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "microvol/path.hpp"
#include "microvol/rng.hpp"

namespace microvol {

struct MittagLefflerParams {
    double alpha = 0.6;
    double beta_ml = 1.0;
    double lambda_ml = 1.0;
};

/// E_{alpha,beta}(z) = sum_n z^n / Gamma(alpha n + beta).
///
/// Compensated power series for z >= -kMlSeriesRadius; below that (alpha <= 1)
/// an integral representation on the real line. Throws when the value would
/// overflow a double.
double mittag_leffler(double alpha, double beta, double z);

inline constexpr double kMlSeriesRadius = 2.0;

/// Branch selectors, exposed for cross-checks on the overlap region.
double mittag_leffler_series(double alpha, double beta, double z);
double mittag_leffler_integral(double alpha, double beta, double z);

/// f^{alpha,lambda}(t) = lambda t^(alpha-1) E_{alpha,alpha}(-lambda t^alpha), t > 0.
double ml_density(double alpha, double lambda, double t);
double ml_density(const MittagLefflerParams& p, double t);

/// F^{alpha,lambda}(t) = int_0^t f^{alpha,lambda}, by quadrature in u = s^alpha.
double ml_cdf(double alpha, double lambda, double t);
double ml_cdf(const MittagLefflerParams& p, double t);

/// int_0^inf f^{alpha,lambda}(s) e^(-z s) ds by quadrature (z >= 0).
double ml_density_laplace(double alpha, double lambda, double z);

/// Riemann-Liouville integral I^r g on a uniform grid starting at t = 0, with
/// exact weights of (t - s)^(r-1) against the piecewise-linear interpolant.
PathGrid fractional_integral(const PathGrid& samples, double r);

/// I^r g(t) at the given times for a callable g that may be integrably singular
/// at 0. Uses double-exponential quadrature on each [0, t].
PathGrid fractional_integral(const std::function<double(double)>& g, double r, const std::vector<double>& times);

/// D^r g = d/dt I^(1-r) g, first-order differences of the sampled integral.
PathGrid fractional_derivative(const PathGrid& samples, double r);

/// Exact fBm sampler on the grid k/n, k = 0..n (times scaled by `horizon`).
/// Up to kFbmCholeskyLimit points the increment covariance is factorized by
/// Cholesky once; larger grids use the Durbin-Levinson recursion.
class FbmGenerator {
public:
    FbmGenerator(double hurst, std::size_t steps, double horizon = 1.0);
    ~FbmGenerator();
    FbmGenerator(FbmGenerator&&) noexcept;
    FbmGenerator& operator=(FbmGenerator&&) noexcept;

    double hurst() const noexcept;
    std::size_t steps() const noexcept;
    PathGrid sample(Rng& rng) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

inline constexpr std::size_t kFbmCholeskyLimit = 4096;
inline constexpr std::size_t kFbmMaxSteps = std::size_t{1} << 14;

PathGrid simulate_fbm(double hurst, std::size_t steps, std::uint64_t seed, double horizon = 1.0);

}  // namespace microvol
