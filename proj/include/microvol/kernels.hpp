#pragma once

// Parametric excitation kernels, the structured 2x2 kernel matrix of the
// bid/ask price model, its eigen-structure, and the asymptotic sequences
// (a_T, mu_T) that drive the nearly unstable regime.

#include <array>
#include <string>
#include <vector>

namespace microvol {

enum class KernelFamily { exponential_mixture, shifted_power_law };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// One exponential component c * r * exp(-r x). Coefficients are normalized
/// so that they sum to one inside a KernelFunction.
struct ExpComponent {
    double coefficient = 1.0;
    double rate = 1.0;
};

/// A nonnegative, non-increasing kernel on [0, inf) with L1 norm `weight`.
///
///  - exponential mixture: weight * sum_i c_i r_i exp(-r_i x), sum_i c_i = 1, c_i >= 0
///  - shifted power law:   weight * alpha (1 + x)^-(1 + alpha)
///
/// The power-law exponent is not range-checked on construction; l1_norm()
/// rejects exponents for which the integral diverges.
class KernelFunction {
public:
    static KernelFunction exponential(double weight, double rate);
    static KernelFunction exponential_mixture(double weight, std::vector<ExpComponent> components);
    static KernelFunction shifted_power_law(double weight, double alpha);

    KernelFamily family() const noexcept { return family_; }
    double weight() const noexcept { return weight_; }
    const std::vector<ExpComponent>& components() const noexcept { return components_; }
    double alpha() const noexcept { return alpha_; }

    double operator()(double x) const;
    /// Integral over [0, x].
    double cumulative(double x) const;
    /// Integral over [x, inf).
    double tail(double x) const;
    /// Integral of x k(x) over [0, inf); +inf when it diverges.
    double first_moment() const;

    KernelFunction scaled(double factor) const;

    /// a f + b g for nonnegative a, b. Both kernels must share the family and,
    /// for power laws, the exponent.
    static KernelFunction combine(double a, const KernelFunction& f, double b, const KernelFunction& g);

private:
    KernelFunction() = default;

    KernelFamily family_ = KernelFamily::exponential_mixture;
    double weight_ = 0.0;
    std::vector<ExpComponent> components_;
    double alpha_ = 0.0;
};

/// Closed-form L1 norm. Throws if the integral diverges.
double l1_norm(const KernelFunction& k);
/// Adaptive-quadrature L1 norm, used to cross-check the closed form.
double l1_norm_quadrature(const KernelFunction& k);

/// Difference of two nonnegative kernels; used for the second eigenvalue phi1 - phi2.
struct SignedKernel {
    KernelFunction positive;
    KernelFunction negative;

    double operator()(double x) const { return positive(x) - negative(x); }
    /// Signed integral over [0, inf).
    double integral() const { return positive.weight() - negative.weight(); }
};

using Matrix2 = std::array<std::array<double, 2>, 2>;
using Vector2 = std::array<double, 2>;

/// phi = [[phi1, beta phi2], [phi2, phi1 + (beta - 1) phi2]].
///
/// Row i holds the kernels acting on the intensity of mark i (0 = up, 1 = down),
/// column j the mark of the exciting event.
class KernelMatrixSpec {
public:
    /// Checks beta >= 1 and family compatibility only. Use build_kernel_matrix()
    /// for a spec that also satisfies the criticality normalization.
    KernelMatrixSpec(KernelFunction phi1, KernelFunction phi2, double beta);

    const KernelFunction& phi1() const noexcept { return phi1_; }
    const KernelFunction& phi2() const noexcept { return phi2_; }
    double beta() const noexcept { return beta_; }

    /// Kernel at row i, column j, as a KernelFunction.
    KernelFunction entry(int i, int j) const;
    Matrix2 at(double x) const;
    Matrix2 integral() const;
    /// Spectral radius of the integrated matrix, computed from its eigenvalues.
    double spectral_radius() const;
    /// |‖phi1‖ + beta ‖phi2‖ - 1|.
    double criticality_residual() const;

private:
    KernelFunction phi1_;
    KernelFunction phi2_;
    double beta_;
};

/// Validated constructor: rejects specs whose spectral radius differs from one
/// by more than `tolerance`.
KernelMatrixSpec build_kernel_matrix(KernelFunction phi1, KernelFunction phi2, double beta,
                                     double tolerance = 1e-6);

enum class Regime { light, heavy };

std::string to_string(Regime regime);
Regime regime_from_string(const std::string& name);

/// Endogeneity level and baseline at horizon T.
struct ScaledParams {
    double a = 0.0;
    double mu = 0.0;
};

/// Light tail: a_T = 1 - lambda / T,         mu_T = mu.
/// Heavy tail: a_T = 1 - lambda* / T^alpha,  mu_T = mu T^(alpha - 1).
class AsymptoticSequence {
public:
    static AsymptoticSequence light(double lambda, double mu);
    static AsymptoticSequence heavy(double alpha, double lambda_star, double mu);

    Regime regime() const noexcept { return regime_; }
    /// lambda in the light regime, lambda* in the heavy one.
    double lambda() const noexcept { return lambda_; }
    double alpha() const noexcept { return alpha_; }
    double mu() const noexcept { return mu_; }

    /// Horizons T <= min_horizon() give a_T <= 0 and are rejected.
    double min_horizon() const;
    double a(double T) const;
    double mu_at(double T) const;
    ScaledParams at(double T) const { return {a(T), mu_at(T)}; }

private:
    AsymptoticSequence() = default;

    Regime regime_ = Regime::light;
    double lambda_ = 0.0;
    double alpha_ = 1.0;
    double mu_ = 0.0;
};

/// Eigen-structure of phi(t)^T shared by every t.
struct SpectralData {
    KernelFunction lambda1;  // phi1 + beta phi2
    SignedKernel lambda2;    // phi1 - phi2
    Vector2 v1{};            // (1, beta)
    Vector2 v2{};            // (1, -1)
    Vector2 e1{};            // v1 / |v1|
    double m = 0.0;          // first moment of lambda1 (light regime)
    double tail_alpha = 0.0; // heavy regime exponent
    double tail_c = 0.0;     // lim alpha x^alpha int_x^inf lambda1 (heavy regime)
};

SpectralData eigen_structure(const KernelMatrixSpec& spec, Regime regime);

struct AssumptionCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    bool all_passed() const;
    const AssumptionCheck& get(const std::string& name) const;
};

/// Advisory checks of the regime assumptions. Never throws on failed checks.
AssumptionReport validate_assumptions(const KernelMatrixSpec& spec, const AsymptoticSequence& seq);

}  // namespace microvol
