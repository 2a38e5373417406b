#pragma once

#include <algorithm>
#include <cmath>

#include "microvol/error.hpp"

namespace microvol {

template <class Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf cdf, double level) {
    if (xs.empty()) throw Error("KS test needs a nonempty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    KsResult r;
    r.statistic = d;
    r.critical = kolmogorov_critical(level) / std::sqrt(n);
    r.p_value = kolmogorov_survival(std::sqrt(n) * d);
    r.reject = d > r.critical;
    return r;
}

}  // namespace microvol
