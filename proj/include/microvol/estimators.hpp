#pragma once

// Estimators applied to sampled paths: realized variance, leverage
// correlation, quadratic covariation, Hurst moment scaling and
// Kolmogorov-Smirnov distances.

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "microvol/path.hpp"

namespace microvol {

/// Point estimate with standard error; confidence intervals are point +- z stderr.
struct EstimateWithCI {
    double point = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;

    double lower(double z = 1.96) const { return point - z * std_error; }
    double upper(double z = 1.96) const { return point + z * std_error; }
};

nlohmann::json to_json(const EstimateWithCI& e);

/// Mean and standard error of the mean.
EstimateWithCI mean_estimate(const std::vector<double>& xs);

/// Sum of squared increments over consecutive windows of length `window`
/// (in path time), indexed by window start. The path is read at window
/// boundaries and at every sample inside.
PathGrid realized_variance(const PathGrid& path, double window);

inline constexpr double kDefaultLeverageWindowFraction = 1.0 / 50.0;

/// Pearson correlation between window returns and the increment of realized
/// variance from that window to the next, windows of length `window`.
EstimateWithCI leverage_correlation(const PathGrid& price, double window);
/// Same statistic pooled over an ensemble (all return/increment pairs).
EstimateWithCI leverage_correlation(const std::vector<PathGrid>& prices, double window);

/// Pearson correlation with Fisher-z standard error.
EstimateWithCI pearson(const std::vector<double>& x, const std::vector<double>& y);

/// sum dx dy on the common refinement of the two time grids (paths read as
/// cadlag step functions, zero before their first sample).
double quadratic_covariation(const PathGrid& x, const PathGrid& y);

/// Pooled moment-scaling regression log E|X_{t+d} - X_t|^q = c_q + q H log d over
/// the q list, with lags in grid steps. Needs a uniform common grid.
EstimateWithCI hurst_moment_scaling(const std::vector<PathGrid>& ensemble, const std::vector<double>& qs,
                                    const std::vector<std::size_t>& lags);
EstimateWithCI hurst_moment_scaling(const std::vector<PathGrid>& ensemble);

inline const std::vector<double> kDefaultHurstMoments{0.5, 1.0, 1.5, 2.0};
inline const std::vector<std::size_t> kDefaultHurstLags{1, 2, 4, 8, 16, 32};

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;  // asymptotic critical value at `level`
    double p_value = 1.0;
    bool reject = false;
};

/// Two-sample Kolmogorov-Smirnov test at the 1% level by default.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.01);
/// One-sample test against a continuous cdf.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf cdf, double level = 0.01);

/// Asymptotic Kolmogorov tail P(K > x).
double kolmogorov_survival(double x);
/// c(level) with P(K > c) = level.
double kolmogorov_critical(double level);

}  // namespace microvol

#include "microvol/detail/ks_one_sample.hpp"
