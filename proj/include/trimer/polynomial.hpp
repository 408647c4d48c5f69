// polynomial.hpp: real-coefficient polynomial evaluation and root finding.
//
// Coefficients are ordered highest degree first.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace trimer::poly {

inline double eval(std::span<const double> c, double x) {
    double acc = 0.0;
    for (double a : c) acc = acc * x + a;
    return acc;
}

inline std::complex<double> eval(std::span<const double> c, std::complex<double> x) {
    std::complex<double> acc = 0.0;
    for (double a : c) acc = acc * x + a;
    return acc;
}

inline double eval_derivative(std::span<const double> c, double x) {
    const std::size_t deg = c.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < deg; ++i) acc = acc * x + c[i] * double(deg - i);
    return acc;
}

// Drop leading zeros so the first coefficient is the true leading one.
inline std::vector<double> trimmed(std::span<const double> c) {
    auto first = std::find_if(c.begin(), c.end(), [](double a) { return a != 0.0; });
    return {first, c.end()};
}

// Synthetic division by (x - r); the remainder is discarded.
inline std::vector<double> deflate(std::span<const double> c, double r) {
    std::vector<double> out;
    out.reserve(c.size() - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        acc = acc * r + c[i];
        out.push_back(acc);
    }
    return out;
}

// All complex roots: eigenvalues of the companion matrix.
inline std::vector<std::complex<double>> roots(std::span<const double> coeffs) {
    const std::vector<double> c = trimmed(coeffs);
    if (c.size() < 2) return {};
    const Eigen::Index deg = static_cast<Eigen::Index>(c.size() - 1);
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
    for (Eigen::Index i = 0; i < deg; ++i) comp(0, i) = -c[static_cast<std::size_t>(i + 1)] / c[0];
    for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<std::complex<double>> out(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return out;
}

// Newton refinement of a real root estimate.
inline double polish(std::span<const double> c, double x, int max_iter = 50) {
    for (int it = 0; it < max_iter; ++it) {
        const double f = eval(c, x), df = eval_derivative(c, x);
        if (f == 0.0 || df == 0.0) break;
        const double step = f / df;
        const double next = x - step;
        // stop once Newton no longer reduces the residual
        if (std::abs(eval(c, next)) >= std::abs(f)) break;
        x = next;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

// Real roots, ascending: companion eigenvalues with |Im| < imag_tol, Newton polished.
inline std::vector<double> real_roots(std::span<const double> coeffs, double imag_tol = 1e-9) {
    const std::vector<double> c = trimmed(coeffs);
    std::vector<double> out;
    for (const auto& z : roots(c))
        if (std::abs(z.imag()) < imag_tol) out.push_back(polish(c, z.real()));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace trimer::poly
