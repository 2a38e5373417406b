#pragma once

// Resolvent psi = sum_{k>=1} (a phi)^{*k} of the kernel matrix, computed as the
// solution of the renewal equation psi = a phi + (a phi) * psi on a uniform grid.

#include <cstddef>
#include <functional>
#include <vector>

#include "microvol/kernels.hpp"

namespace microvol {

struct ResolventSamples {
    double step = 0.0;
    double a = 0.0;
    std::vector<double> times;
    std::vector<Matrix2> values;
};

/// Trapezoidal product rule marched forward in time; the implicit diagonal term
/// is solved exactly, so the result is the fixed point of the discrete equation.
/// Requires 0 <= a < 1.
ResolventSamples resolvent_psi(const KernelMatrixSpec& spec, double a, double step, std::size_t points);

/// Scalar version for psi = a k + a k * psi.
std::vector<double> resolvent_scalar(const std::function<double(double)>& kernel, double a, double step,
                                     std::size_t points);

/// sup_n |(psi * a phi)(t_n) - (psi(t_n) - a phi(t_n))| with the same trapezoidal rule.
double wiener_hopf_residual(const ResolventSamples& psi, const KernelMatrixSpec& spec);

}  // namespace microvol
