#include "microvol/resolvent.hpp"

#include <algorithm>
#include <cmath>

#include "microvol/error.hpp"

namespace microvol {

namespace {

Matrix2 mul(const Matrix2& x, const Matrix2& y) {
    Matrix2 r{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
    return r;
}

void axpy(Matrix2& acc, double w, const Matrix2& x) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) acc[i][j] += w * x[i][j];
}

void check_level(double a) {
    if (!(a >= 0.0)) throw Error("resolvent level a must be nonnegative");
    if (!(a < 1.0)) throw Error("resolvent diverges for a >= 1");
}

}  // namespace

ResolventSamples resolvent_psi(const KernelMatrixSpec& spec, double a, double step, std::size_t points) {
    check_level(a);
    if (!(step > 0.0) || points == 0) throw Error("resolvent grid needs a positive step and at least one point");

    ResolventSamples out;
    out.step = step;
    out.a = a;
    out.times.resize(points);
    std::vector<Matrix2> k(points);
    for (std::size_t n = 0; n < points; ++n) {
        out.times[n] = step * static_cast<double>(n);
        k[n] = spec.at(out.times[n]);
        for (auto& row : k[n])
            for (auto& v : row) v *= a;
    }

    // (I - h/2 K0)^-1
    Matrix2 lhs{{{1.0 - 0.5 * step * k[0][0][0], -0.5 * step * k[0][0][1]},
                 {-0.5 * step * k[0][1][0], 1.0 - 0.5 * step * k[0][1][1]}}};
    const double det = lhs[0][0] * lhs[1][1] - lhs[0][1] * lhs[1][0];
    if (std::abs(det) < 1e-300) throw Error("resolvent step too large: singular implicit system");
    const Matrix2 inv{{{lhs[1][1] / det, -lhs[0][1] / det}, {-lhs[1][0] / det, lhs[0][0] / det}}};

    out.values.resize(points);
    out.values[0] = k[0];
    for (std::size_t n = 1; n < points; ++n) {
        Matrix2 rhs = k[n];
        axpy(rhs, 0.5 * step, mul(k[n], out.values[0]));
        for (std::size_t j = 1; j < n; ++j) axpy(rhs, step, mul(k[n - j], out.values[j]));
        out.values[n] = mul(inv, rhs);
    }
    return out;
}

std::vector<double> resolvent_scalar(const std::function<double(double)>& kernel, double a, double step,
                                     std::size_t points) {
    check_level(a);
    if (!(step > 0.0) || points == 0) throw Error("resolvent grid needs a positive step and at least one point");
    std::vector<double> k(points);
    for (std::size_t n = 0; n < points; ++n) k[n] = a * kernel(step * static_cast<double>(n));
    std::vector<double> psi(points);
    psi[0] = k[0];
    const double diag = 1.0 - 0.5 * step * k[0];
    for (std::size_t n = 1; n < points; ++n) {
        double acc = 0.5 * k[n] * psi[0];
        for (std::size_t j = 1; j < n; ++j) acc += k[n - j] * psi[j];
        psi[n] = (k[n] + step * acc) / diag;
    }
    return psi;
}

double wiener_hopf_residual(const ResolventSamples& psi, const KernelMatrixSpec& spec) {
    const std::size_t points = psi.values.size();
    std::vector<Matrix2> k(points);
    for (std::size_t n = 0; n < points; ++n) {
        k[n] = spec.at(psi.times[n]);
        for (auto& row : k[n])
            for (auto& v : row) v *= psi.a;
    }
    double worst = 0.0;
    for (std::size_t n = 0; n < points; ++n) {
        Matrix2 conv{};
        if (n > 0) {
            axpy(conv, 0.5 * psi.step, mul(psi.values[n], k[0]));
            axpy(conv, 0.5 * psi.step, mul(psi.values[0], k[n]));
            for (std::size_t j = 1; j < n; ++j) axpy(conv, psi.step, mul(psi.values[n - j], k[j]));
        }
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                worst = std::max(worst, std::abs(conv[i][j] - (psi.values[n][i][j] - k[n][i][j])));
    }
    return worst;
}

}  // namespace microvol
