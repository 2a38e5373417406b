#include "microvol/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "microvol/error.hpp"

namespace microvol {

nlohmann::json to_json(const EstimateWithCI& e) {
    return {{"point", e.point}, {"stderr", e.std_error}, {"n", e.n}};
}

EstimateWithCI mean_estimate(const std::vector<double>& xs) {
    EstimateWithCI e;
    e.n = xs.size();
    if (xs.empty()) return e;
    const double n = static_cast<double>(xs.size());
    e.point = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.point) * (x - e.point);
        e.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

PathGrid realized_variance(const PathGrid& path, double window) {
    check_path(path);
    if (!(window > 0.0)) throw Error("realized variance window must be positive");
    if (path.size() < 2) throw Error("realized variance needs at least two samples");
    const double t0 = path.times.front();
    const double span = path.times.back() - t0;
    const auto windows = static_cast<std::size_t>(std::floor(span / window + 1e-9));
    if (windows == 0) throw Error("realized variance window exceeds the path span");

    PathGrid out;
    std::size_t k = 0;
    for (std::size_t w = 0; w < windows; ++w) {
        const double s = t0 + window * static_cast<double>(w);
        const double e = t0 + window * static_cast<double>(w + 1);
        double prev = value_at(path, s, path.values.front());
        while (k < path.size() && path.times[k] <= s + 1e-12 * window) ++k;
        double rv = 0.0;
        while (k < path.size() && path.times[k] < e - 1e-12 * window) {
            const double d = path.values[k] - prev;
            rv += d * d;
            prev = path.values[k++];
        }
        const double d = value_at(path, e, path.values.front()) - prev;
        rv += d * d;
        out.times.push_back(s);
        out.values.push_back(rv);
    }
    return out;
}

EstimateWithCI pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error("correlation inputs differ in length");
    if (x.size() < 3) throw Error("correlation needs at least three pairs");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0 && syy > 0.0)) throw Error("correlation undefined for a constant input");
    EstimateWithCI e;
    e.n = x.size();
    e.point = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    e.std_error = n > 3.0 ? (1.0 - e.point * e.point) / std::sqrt(n - 3.0) : 0.0;
    return e;
}

namespace {

void leverage_pairs(const PathGrid& price, double window, std::vector<double>& ret, std::vector<double>& drv) {
    const PathGrid rv = realized_variance(price, window);
    const double v0 = price.values.front();
    for (std::size_t w = 0; w + 1 < rv.size(); ++w) {
        const double s = rv.times[w];
        ret.push_back(value_at(price, s + window, v0) - value_at(price, s, v0));
        drv.push_back(rv.values[w + 1] - rv.values[w]);
    }
}

}  // namespace

EstimateWithCI leverage_correlation(const PathGrid& price, double window) {
    std::vector<double> ret;
    std::vector<double> drv;
    leverage_pairs(price, window, ret, drv);
    return pearson(ret, drv);
}

EstimateWithCI leverage_correlation(const std::vector<PathGrid>& prices, double window) {
    std::vector<double> ret;
    std::vector<double> drv;
    for (const auto& p : prices) leverage_pairs(p, window, ret, drv);
    return pearson(ret, drv);
}

double quadratic_covariation(const PathGrid& x, const PathGrid& y) {
    check_path(x);
    check_path(y);
    double acc = 0.0;
    if (x.times == y.times) {
        if (!x.empty()) acc = x.values.front() * y.values.front();
        for (std::size_t i = 1; i < x.size(); ++i)
            acc += (x.values[i] - x.values[i - 1]) * (y.values[i] - y.values[i - 1]);
        return acc;
    }
    // Merge walk over both grids; zero before the first sample.
    std::size_t i = 0;
    std::size_t j = 0;
    double xv = 0.0;
    double yv = 0.0;
    while (i < x.size() || j < y.size()) {
        const double tx = i < x.size() ? x.times[i] : INFINITY;
        const double ty = j < y.size() ? y.times[j] : INFINITY;
        const double t = std::min(tx, ty);
        double nx = xv;
        double ny = yv;
        if (tx == t) nx = x.values[i++];
        if (ty == t) ny = y.values[j++];
        acc += (nx - xv) * (ny - yv);
        xv = nx;
        yv = ny;
    }
    return acc;
}

EstimateWithCI hurst_moment_scaling(const std::vector<PathGrid>& ensemble, const std::vector<double>& qs,
                                    const std::vector<std::size_t>& lags) {
    if (ensemble.empty()) throw Error("Hurst estimation needs at least one path");
    if (qs.empty() || lags.size() < 2) throw Error("Hurst estimation needs moments and at least two lags");
    const auto& grid = ensemble.front().times;
    const double h = uniform_step(grid);
    for (const auto& p : ensemble) {
        check_path(p);
        if (p.times.size() != grid.size()) throw Error("Hurst ensemble paths must share one grid");
    }
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    if (max_lag == 0 || max_lag >= grid.size()) throw Error("Hurst lags must lie in [1, path length)");

    const std::size_t nq = qs.size();
    const std::size_t nd = lags.size();
    std::vector<double> xs(nd);
    std::vector<std::vector<double>> ys(nq, std::vector<double>(nd));
    for (std::size_t d = 0; d < nd; ++d) {
        const std::size_t lag = lags[d];
        xs[d] = std::log(h * static_cast<double>(lag));
        std::vector<double> sums(nq, 0.0);
        double count = 0.0;
        for (const auto& p : ensemble) {
            for (std::size_t t = 0; t + lag < p.size(); ++t) {
                const double inc = std::abs(p.values[t + lag] - p.values[t]);
                for (std::size_t k = 0; k < nq; ++k) sums[k] += std::pow(inc, qs[k]);
                count += 1.0;
            }
        }
        for (std::size_t k = 0; k < nq; ++k) {
            if (!(sums[k] > 0.0)) throw Error("Hurst estimation on constant paths is undefined");
            ys[k][d] = std::log(sums[k] / count);
        }
    }

    const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(nd);
    double sxx = 0.0;
    for (double x : xs) sxx += (x - xbar) * (x - xbar);
    double num = 0.0;
    double den = 0.0;
    std::vector<double> ybar(nq);
    for (std::size_t k = 0; k < nq; ++k) {
        ybar[k] = std::accumulate(ys[k].begin(), ys[k].end(), 0.0) / static_cast<double>(nd);
        for (std::size_t d = 0; d < nd; ++d) num += qs[k] * (xs[d] - xbar) * (ys[k][d] - ybar[k]);
        den += qs[k] * qs[k] * sxx;
    }
    EstimateWithCI e;
    e.point = num / den;
    e.n = ensemble.size();
    double ss = 0.0;
    for (std::size_t k = 0; k < nq; ++k)
        for (std::size_t d = 0; d < nd; ++d) {
            const double r = ys[k][d] - ybar[k] - qs[k] * e.point * (xs[d] - xbar);
            ss += r * r;
        }
    const double dof = static_cast<double>(nq * nd) - static_cast<double>(nq) - 1.0;
    e.std_error = dof > 0.0 ? std::sqrt(ss / dof / den) : 0.0;
    return e;
}

EstimateWithCI hurst_moment_scaling(const std::vector<PathGrid>& ensemble) {
    return hurst_moment_scaling(ensemble, kDefaultHurstMoments, kDefaultHurstLags);
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

double kolmogorov_critical(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error("KS level must lie in (0, 1)");
    double lo = 0.2;
    double hi = 5.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_survival(mid) > level)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level) {
    if (a.empty() || b.empty()) throw Error("KS test needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == t) ++i;
        while (j < b.size() && b[j] == t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    KsResult r;
    r.statistic = d;
    const double en = std::sqrt(n * m / (n + m));
    r.critical = kolmogorov_critical(level) / en;
    r.p_value = kolmogorov_survival(en * d);
    r.reject = d > r.critical;
    return r;
}

}  // namespace microvol
