#include "microvol/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "microvol/error.hpp"

namespace microvol {

namespace {

constexpr double kPi = std::numbers::pi;

void check_ml_indices(double alpha, double beta) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("Mittag-Leffler alpha must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("Mittag-Leffler beta must be positive");
}

// log of the dominant asymptotic term (1/alpha) z^((1-beta)/alpha) exp(z^(1/alpha)), z > 0.
double log_growth(double alpha, double beta, double z) {
    return std::pow(z, 1.0 / alpha) - std::log(alpha) + (1.0 - beta) / alpha * std::log(z);
}

}  // namespace

double mittag_leffler_series(double alpha, double beta, double z) {
    check_ml_indices(alpha, beta);
    if (z == 0.0) return 1.0 / std::tgamma(beta);
    if (z > 0.0) {
        const double lg = log_growth(alpha, beta, z);
        if (lg > 700.0) {
            std::ostringstream os;
            os << "Mittag-Leffler overflow: E_{" << alpha << "," << beta << "}(" << z << ") ~ exp(" << lg << ")";
            throw Error(os.str());
        }
    }
    const double lz = std::log(std::abs(z));
    const bool negative = z < 0.0;
    // Terms peak near n ~ |z|^(1/alpha) / alpha; leave room past the peak.
    const double peak = std::pow(std::abs(z), 1.0 / alpha) / alpha;
    const std::size_t cap = static_cast<std::size_t>(std::min(250.0 + 4.0 * peak, 2e5));

    // Neumaier summation.
    double sum = 0.0;
    double comp = 0.0;
    double max_term = 0.0;
    double prev_mag = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < cap; ++n) {
        const double nd = static_cast<double>(n);
        const double arg = alpha * nd + beta;
        const double mag = std::exp(nd * lz - std::lgamma(arg));
        const double term = (negative && (n % 2 == 1)) ? -mag : mag;
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            comp += (sum - t) + term;
        else
            comp += (term - t) + sum;
        sum = t;
        max_term = std::max(max_term, mag);
        const double total = std::abs(sum + comp);
        if (n > 2 && mag < prev_mag && mag <= 1e-17 * total && arg > 2.0) break;
        if (n > 2 && mag == 0.0) break;
        prev_mag = mag;
    }
    const double value = sum + comp;
    if (negative && max_term > 1e5 * std::abs(value)) {
        std::ostringstream os;
        os << "Mittag-Leffler series cancellation too large at z=" << z << " (max term " << max_term << ", value "
           << value << ")";
        throw Error(os.str());
    }
    return value;
}

double mittag_leffler_integral(double alpha, double beta, double z) {
    check_ml_indices(alpha, beta);
    if (!(alpha < 1.0)) throw Error("integral representation needs alpha < 1");
    if (!(z < 0.0)) throw Error("integral representation needs z < 0");
    if (beta >= 1.0 + alpha) {
        // E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        return (mittag_leffler_integral(alpha, beta - alpha, z) - 1.0 / std::tgamma(beta - alpha)) / z;
    }
    const double s1 = std::sin(kPi * (1.0 - beta));
    const double s2 = std::sin(kPi * (1.0 - beta + alpha));
    const double c = std::cos(alpha * kPi);
    const double pw = (1.0 - beta) / alpha;
    const double inv_a = 1.0 / alpha;
    auto kernel = [&](double chi) {
        if (chi <= 0.0) return 0.0;
        const double num = chi * s1 - z * s2;
        const double den = chi * chi - 2.0 * chi * z * c + z * z;
        return std::exp(pw * std::log(chi) - std::pow(chi, inv_a)) * num / den;
    };

    // Beyond chi^(1/alpha) = 60 the exponential factor is below 1e-26.
    const double cutoff = std::pow(60.0, alpha);
    // The denominator is smallest at chi = z cos(alpha pi), a sharp peak as alpha -> 1.
    const double peak = z * c;
    std::vector<double> cuts{0.0};
    if (peak > 0.0 && peak < cutoff) {
        cuts.push_back(peak);
        if (2.0 * peak < cutoff) cuts.push_back(2.0 * peak);
    }
    cuts.push_back(cutoff);

    boost::math::quadrature::tanh_sinh<double> ts(12);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += ts.integrate(kernel, cuts[i], cuts[i + 1], 1e-14);
    }
    return total / (alpha * kPi);
}

double mittag_leffler(double alpha, double beta, double z) {
    check_ml_indices(alpha, beta);
    if (!std::isfinite(z)) throw Error("Mittag-Leffler argument must be finite");
    if (alpha == 1.0 && beta == 1.0) {
        if (z > 700.0) throw Error("Mittag-Leffler overflow: E_{1,1}(z) = exp(z) with z > 700");
        return std::exp(z);
    }
    if (z >= -kMlSeriesRadius || alpha >= 1.0) return mittag_leffler_series(alpha, beta, z);
    return mittag_leffler_integral(alpha, beta, z);
}

double ml_density(double alpha, double lambda, double t) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("Mittag-Leffler density needs alpha in (0, 1)");
    if (!(lambda > 0.0)) throw Error("Mittag-Leffler density needs lambda > 0");
    if (!(t > 0.0)) throw Error("Mittag-Leffler density is singular at t = 0; needs t > 0");
    const double ta = std::pow(t, alpha);
    return lambda * ta / t * mittag_leffler(alpha, alpha, -lambda * ta);
}

double ml_density(const MittagLefflerParams& p, double t) { return ml_density(p.alpha, p.lambda_ml, t); }

double ml_cdf(double alpha, double lambda, double t) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("Mittag-Leffler cdf needs alpha in (0, 1)");
    if (!(lambda > 0.0)) throw Error("Mittag-Leffler cdf needs lambda > 0");
    if (t < 0.0) throw Error("Mittag-Leffler cdf needs t >= 0");
    if (t == 0.0) return 0.0;
    if (std::isinf(t)) return 1.0;
    // With u = s^alpha the density becomes (lambda / alpha) E_{alpha,alpha}(-lambda u) du.
    const double upper = std::pow(t, alpha);
    auto g = [&](double u) { return mittag_leffler(alpha, alpha, -lambda * u); };
    double err = 0.0;
    const double v = lambda / alpha *
                     boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, upper, 10, 1e-12, &err);
    return std::clamp(v, 0.0, 1.0);
}

double ml_cdf(const MittagLefflerParams& p, double t) { return ml_cdf(p.alpha, p.lambda_ml, t); }

double ml_density_laplace(double alpha, double lambda, double z) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("Mittag-Leffler transform needs alpha in (0, 1)");
    if (!(lambda > 0.0)) throw Error("Mittag-Leffler transform needs lambda > 0");
    if (z < 0.0) throw Error("Laplace argument must be nonnegative");
    auto g = [&](double u) {
        if (u <= 0.0) return lambda / alpha * mittag_leffler(alpha, alpha, 0.0);
        return lambda / alpha * mittag_leffler(alpha, alpha, -lambda * u) * std::exp(-z * std::pow(u, 1.0 / alpha));
    };
    // exp(-z u^(1/alpha)) is not smooth at u = 0, which tanh-sinh tolerates.
    boost::math::quadrature::tanh_sinh<double> ts;
    if (z == 0.0) {
        boost::math::quadrature::exp_sinh<double> es;
        return ts.integrate(g, 0.0, 1.0, 1e-13) + es.integrate(g, 1.0, std::numeric_limits<double>::infinity(), 1e-13);
    }
    // Past z u^(1/alpha) = 60 the remaining mass is below e^-60.
    return ts.integrate(g, 0.0, std::pow(60.0 / z, alpha), 1e-13);
}

// --------------------------------------------------------------------------
// Fractional operators

PathGrid fractional_integral(const PathGrid& samples, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw Error("fractional integral order must lie in (0, 1]");
    check_path(samples);
    if (samples.size() < 2) throw Error("fractional integral needs at least two samples");
    if (std::abs(samples.times.front()) > 1e-12) throw Error("fractional integral grid must start at t = 0");
    const double h = uniform_step(samples.times);
    const std::size_t n = samples.size();

    // Weights of the product trapezoid rule for int_0^{t_n} (t_n - s)^(r-1) g(s) ds
    // with g linear on each cell: c * sum_j a_{j,n} g_j, c = h^r / Gamma(r + 2).
    std::vector<double> p(n + 1);
    for (std::size_t k = 0; k <= n; ++k) p[k] = std::pow(static_cast<double>(k), r + 1.0);
    const double c = std::pow(h, r) / std::tgamma(r + 2.0);

    PathGrid out;
    out.times = samples.times;
    out.values.assign(n, 0.0);
    const auto& g = samples.values;
    for (std::size_t m = 1; m < n; ++m) {
        const double md = static_cast<double>(m);
        double acc = (p[m - 1] - (md - 1.0 - r) * std::pow(md, r)) * g[0];
        for (std::size_t j = 1; j < m; ++j) {
            const std::size_t k = m - j;
            acc += (p[k + 1] - 2.0 * p[k] + p[k - 1]) * g[j];
        }
        acc += g[m];
        out.values[m] = c * acc;
    }
    return out;
}

PathGrid fractional_integral(const std::function<double(double)>& g, double r, const std::vector<double>& times) {
    if (!(r > 0.0 && r <= 1.0)) throw Error("fractional integral order must lie in (0, 1]");
    const double norm = 1.0 / std::tgamma(r);
    boost::math::quadrature::tanh_sinh<double> ts(12);
    PathGrid out;
    out.times = times;
    out.values.reserve(times.size());
    for (double t : times) {
        if (t < 0.0) throw Error("fractional integral times must be nonnegative");
        if (t == 0.0) {
            out.values.push_back(0.0);
            continue;
        }
        // In the upper half xc = t - s exactly, which keeps the kernel accurate near s = t.
        auto f = [&](double s, double xc) {
            const double d = (s > 0.5 * t) ? xc : t - s;
            if (d <= 0.0 || s <= 0.0) return 0.0;
            return std::pow(d, r - 1.0) * g(s);
        };
        out.values.push_back(norm * ts.integrate(f, 0.0, t, 1e-10));
    }
    return out;
}

PathGrid fractional_derivative(const PathGrid& samples, double r) {
    if (!(r >= 0.0 && r < 1.0)) throw Error("fractional derivative order must lie in [0, 1)");
    const PathGrid j = fractional_integral(samples, 1.0 - r);
    const double h = uniform_step(samples.times);
    PathGrid out;
    out.times = samples.times;
    out.values.resize(j.size());
    for (std::size_t k = 1; k < j.size(); ++k) out.values[k] = (j.values[k] - j.values[k - 1]) / h;
    out.values[0] = out.values[1];
    return out;
}

// --------------------------------------------------------------------------
// Fractional Brownian motion

struct FbmGenerator::Impl {
    double hurst = 0.5;
    std::size_t steps = 0;
    double horizon = 1.0;
    std::vector<double> gamma;  // autocovariance of the increments
    Eigen::MatrixXd lower;      // Cholesky factor (small grids)
    std::vector<double> innov;  // Durbin-Levinson innovation variances (large grids)
};

FbmGenerator::FbmGenerator(double hurst, std::size_t steps, double horizon) : impl_(std::make_unique<Impl>()) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw Error("Hurst parameter must lie in (0, 1)");
    if (steps < 1) throw Error("fBm grid needs at least one step");
    if (steps > kFbmMaxSteps) throw Error("fBm grid exceeds the exact-method limit of 2^14 steps");
    if (!(horizon > 0.0)) throw Error("fBm horizon must be positive");
    Impl& im = *impl_;
    im.hurst = hurst;
    im.steps = steps;
    im.horizon = horizon;
    const double h = horizon / static_cast<double>(steps);
    const double scale = 0.5 * std::pow(h, 2.0 * hurst);
    im.gamma.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double kd = static_cast<double>(k);
        im.gamma[k] = scale * (std::pow(kd + 1.0, 2.0 * hurst) - 2.0 * std::pow(kd, 2.0 * hurst) +
                               std::pow(std::abs(kd - 1.0), 2.0 * hurst));
    }

    if (steps <= kFbmCholeskyLimit) {
        const Eigen::Index n = static_cast<Eigen::Index>(steps);
        Eigen::MatrixXd cov(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = im.gamma[static_cast<std::size_t>(std::abs(i - j))];
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            cov.diagonal().array() += 1e-12 * im.gamma[0];
            llt.compute(cov);
            if (llt.info() != Eigen::Success) throw Error("fBm covariance Cholesky failed after jitter");
        }
        im.lower = llt.matrixL();
        return;
    }

    // Innovation variances of the Durbin-Levinson recursion; the partial
    // autocorrelations are recomputed per sample to keep memory linear.
    im.innov.resize(steps);
    im.innov[0] = im.gamma[0];
    std::vector<double> phi;
    std::vector<double> next;
    for (std::size_t k = 1; k < steps; ++k) {
        double acc = im.gamma[k];
        for (std::size_t j = 1; j < k; ++j) acc -= phi[j - 1] * im.gamma[k - j];
        const double pkk = acc / im.innov[k - 1];
        next.assign(k, 0.0);
        for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - pkk * phi[k - j - 1];
        next[k - 1] = pkk;
        phi.swap(next);
        im.innov[k] = im.innov[k - 1] * (1.0 - pkk * pkk);
        if (!(im.innov[k] > 0.0)) throw Error("fBm Durbin-Levinson recursion lost positivity");
    }
}

FbmGenerator::~FbmGenerator() = default;
FbmGenerator::FbmGenerator(FbmGenerator&&) noexcept = default;
FbmGenerator& FbmGenerator::operator=(FbmGenerator&&) noexcept = default;

double FbmGenerator::hurst() const noexcept { return impl_->hurst; }
std::size_t FbmGenerator::steps() const noexcept { return impl_->steps; }

PathGrid FbmGenerator::sample(Rng& rng) const {
    const Impl& im = *impl_;
    const std::size_t n = im.steps;
    std::vector<double> inc(n);
    if (im.lower.size() > 0) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        const Eigen::VectorXd x = im.lower.triangularView<Eigen::Lower>() * z;
        for (std::size_t i = 0; i < n; ++i) inc[i] = x(static_cast<Eigen::Index>(i));
    } else {
        std::vector<double> phi;
        std::vector<double> next;
        inc[0] = std::sqrt(im.innov[0]) * rng.normal();
        for (std::size_t k = 1; k < n; ++k) {
            double acc = im.gamma[k];
            for (std::size_t j = 1; j < k; ++j) acc -= phi[j - 1] * im.gamma[k - j];
            const double pkk = acc / im.innov[k - 1];
            next.assign(k, 0.0);
            for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - pkk * phi[k - j - 1];
            next[k - 1] = pkk;
            phi.swap(next);
            double mean = 0.0;
            for (std::size_t j = 1; j <= k; ++j) mean += phi[j - 1] * inc[k - j];
            inc[k] = mean + std::sqrt(im.innov[k]) * rng.normal();
        }
    }
    PathGrid out;
    out.times = uniform_times(n + 1, 0.0, im.horizon);
    out.values.resize(n + 1);
    out.values[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.values[i + 1] = out.values[i] + inc[i];
    return out;
}

PathGrid simulate_fbm(double hurst, std::size_t steps, std::uint64_t seed, double horizon) {
    FbmGenerator gen(hurst, steps, horizon);
    Rng rng(seed);
    return gen.sample(rng);
}

}  // namespace microvol
