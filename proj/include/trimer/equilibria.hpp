// equilibria.hpp: fixed points of the classical dynamics and their linear stability.
#pragma once

#include "trimer/classical.hpp"
#include "trimer/errors.hpp"
#include "trimer/model.hpp"
#include "trimer/polynomial.hpp"

#include <boost/math/tools/roots.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace trimer {

// ---------------------------------------------------------------------------
// Twin-surface polynomial
// ---------------------------------------------------------------------------

// Real fixed points on w1 = w2 = w: 4(1+mu)w^4 - 2(1+chi+4mu)w^3 + 6mu w^2 + (2chi-1)w - 1 - 2mu.
inline std::array<double, 5> twin_quartic_coeffs(double chi, double mu) {
    return {4.0 * (1.0 + mu), -2.0 * (1.0 + chi + 4.0 * mu), 6.0 * mu, 2.0 * chi - 1.0, -1.0 - 2.0 * mu};
}

// The quartic with the root w = 1 divided out (unnormalized, leading 4(1+mu)).
inline std::array<double, 4> twin_cubic_raw(double chi, double mu) {
    const auto q = twin_quartic_coeffs(chi, mu);
    const auto d = poly::deflate(q, 1.0);
    return {d[0], d[1], d[2], d[3]};
}

// Monic cubic for the remaining twin fixed points.
inline std::array<double, 4> twin_cubic_coeffs(double chi, double mu) {
    if (mu == -1.0) throw DomainError("twin_cubic_coeffs: mu = -1 degenerates the quartic to a cubic");
    const double den = 2.0 * (1.0 + mu);
    return {1.0, (1.0 - chi - 2.0 * mu) / den, (1.0 - chi + mu) / den, (1.0 + 2.0 * mu) / (2.0 * den)};
}

// Sign decides the number of real cubic roots: one for Delta > 0, three for Delta < 0.
inline double discriminant(double chi, double mu) {
    const double m2 = mu * mu, m3 = m2 * mu, m4 = m3 * mu;
    return -chi * chi * chi * chi - 2.0 * (3.0 + 7.0 * mu) * chi * chi * chi + 3.0 * (2.0 - 11.0 * m2) * chi * chi +
           2.0 * (5.0 + 12.0 * mu - 18.0 * m2 - 52.0 * m3) * chi + 2.0 * (9.0 + 76.0 * mu + 228.0 * m2 + 264.0 * m3 + 76.0 * m4);
}

// Delta as a polynomial in chi, highest degree first.
inline std::array<double, 5> discriminant_chi_coeffs(double mu) {
    const double m2 = mu * mu, m3 = m2 * mu, m4 = m3 * mu;
    return {-1.0, -2.0 * (3.0 + 7.0 * mu), 3.0 * (2.0 - 11.0 * m2), 2.0 * (5.0 + 12.0 * mu - 18.0 * m2 - 52.0 * m3),
            2.0 * (9.0 + 76.0 * mu + 228.0 * m2 + 264.0 * m3 + 76.0 * m4)};
}

struct DiscriminantRoots {
    double chi_minus;
    double chi_plus;
};

namespace detail {

// Sign changes of f over [lo, hi] on a uniform grid augmented with hint points, refined by TOMS 748.
template <class F>
std::vector<double> bracketed_roots(F f, double lo, double hi, int samples, std::vector<double> hints, double tol) {
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(samples) + hints.size() + 1);
    for (int i = 0; i <= samples; ++i) xs.push_back(lo + (hi - lo) * double(i) / samples);
    for (double h : hints)
        if (h > lo && h < hi) xs.push_back(h);
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    double xa = xs.front(), fa = f(xa);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double xb = xs[i], fb = f(xb);
        if (fa == 0.0) {
            if (out.empty() || out.back() != xa) out.push_back(xa);
        } else if (fa * fb < 0.0) {
            std::uintmax_t iters = 200;
            auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
            const auto r = boost::math::tools::toms748_solve(f, xa, xb, fa, fb, stop, iters);
            out.push_back(0.5 * (r.first + r.second));
        }
        xa = xb;
        fa = fb;
    }
    return out;
}

}  // namespace detail

// The two real roots of Delta(chi, mu) = 0.  When both are positive they are returned in ascending order.
inline DiscriminantRoots discriminant_roots(double mu) {
    const auto c = discriminant_chi_coeffs(mu);
    double bound = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) bound = std::max(bound, std::abs(c[i] / c[0]));
    bound += 1.0;
    std::vector<double> hints;
    for (const auto& z : poly::roots(c)) hints.push_back(z.real());
    auto f = [mu](double chi) { return discriminant(chi, mu); };
    const auto roots = detail::bracketed_roots(f, -bound, bound, 20000, hints, 1e-14);
    if (roots.size() != 2) {
        std::ostringstream msg;
        msg << "discriminant_roots: found " << roots.size() << " sign change(s) of Delta(chi, mu=" << detail::fmt_double(mu)
            << ") on chi in [" << detail::fmt_double(-bound) << ", " << detail::fmt_double(bound) << "], expected 2";
        throw DomainError(msg.str());
    }
    return {roots[0], roots[1]};
}

inline std::optional<DiscriminantRoots> try_discriminant_roots(double mu) {
    try {
        return discriminant_roots(mu);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

// Distinct real roots of the twin quartic.
struct TwinRootCount {
    int distinct{0};
    bool degenerate{false};  // on Delta = 0 or on chi = 9/4 + mu, where two roots merge
};

inline TwinRootCount count_twin_roots(double chi, double mu) {
    TwinRootCount rc;
    if (mu == -1.0) {
        std::vector<double> r = poly::real_roots(twin_quartic_coeffs(chi, mu));
        r.erase(std::unique(r.begin(), r.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), r.end());
        rc.distinct = static_cast<int>(r.size());
        return rc;
    }
    const double d = discriminant(chi, mu);
    const int cubic = d > 0.0 ? 1 : (d < 0.0 ? 3 : 2);
    rc.degenerate = (d == 0.0);
    // the cubic vanishes at w = 1 exactly on chi = 9/4 + mu
    const double s1_gap = chi - 2.25 - mu;
    const bool touches_s1 = std::abs(s1_gap) <= 1e-12 * std::max(1.0, std::abs(chi));
    if (touches_s1) return {cubic, true};
    rc.distinct = 1 + cubic;
    return rc;
}

// ---------------------------------------------------------------------------
// Fixed-point records
// ---------------------------------------------------------------------------

enum class FixedPointClass { S1, S2, S3, S4, SDW_1, SDW_2, VORTEX_PLUS, VORTEX_MINUS };
enum class Verdict { Stable, Unstable, Marginal };

inline const char* to_string(FixedPointClass c) {
    switch (c) {
        case FixedPointClass::S1: return "s1";
        case FixedPointClass::S2: return "s2";
        case FixedPointClass::S3: return "s3";
        case FixedPointClass::S4: return "s4";
        case FixedPointClass::SDW_1: return "sdw1";
        case FixedPointClass::SDW_2: return "sdw2";
        case FixedPointClass::VORTEX_PLUS: return "vortex+";
        case FixedPointClass::VORTEX_MINUS: return "vortex-";
    }
    return "?";
}

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Marginal: return "marginal";
    }
    return "?";
}

// Map code: 1 stable, 0 unstable, 2 marginal.
inline int verdict_code(Verdict v) {
    switch (v) {
        case Verdict::Stable: return 1;
        case Verdict::Unstable: return 0;
        case Verdict::Marginal: return 2;
    }
    return -1;
}

struct FixedPointRecord {
    FixedPointClass cls{FixedPointClass::S1};
    ClassicalState w;
    std::vector<cplx> lambda_squared;        // closed form, empty for s2..s4
    std::vector<cplx> jacobian_eigenvalues;  // numerical linearization
    Verdict verdict{Verdict::Stable};
    bool stable{true};
    double residual{0.0};
    double chi{0.0}, mu{0.0}, omega{-1.0};
};

inline constexpr double kFixedPointResidual = 1e-10;
inline constexpr double kStabilityTol = 1e-7;
inline constexpr double kMarginalTol = 1e-9;

inline ClassicalState vortex_point(bool plus) {
    const cplx e = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    return plus ? ClassicalState{e, std::conj(e)} : ClassicalState{std::conj(e), e};
}

// Verdict from linearization eigenvalues.
inline Verdict classify_eigenvalues(const std::vector<cplx>& eig, double omega) {
    const double w = std::abs(omega);
    for (const auto& l : eig)
        if (std::abs(l * l) < kMarginalTol * w * w) return Verdict::Marginal;
    for (const auto& l : eig)
        if (std::abs(l.real()) >= kStabilityTol * std::max(1.0, std::abs(l)) * w) return Verdict::Unstable;
    return Verdict::Stable;
}

// Verdict from closed-form lambda^2 values: stable iff every value is real and negative.
inline Verdict classify_lambda_squared(const std::vector<cplx>& l2, double omega) {
    const double w2 = omega * omega;
    for (const auto& v : l2)
        if (std::abs(v) < kMarginalTol * w2) return Verdict::Marginal;
    for (const auto& v : l2)
        if (v.real() >= 0.0 || std::abs(v.imag()) > kStabilityTol * std::abs(v)) return Verdict::Unstable;
    return Verdict::Stable;
}

// Eigenvalues of the real 4x4 Jacobian, sorted by (imag, real).
inline std::vector<cplx> stability_numeric(const ClassicalState& fp, const ModelParams& params) {
    const double res = eom_residual(fp, params);
    if (!(res < kFixedPointResidual * params.abs_omega()))
        throw NotAFixedPointError("stability_numeric: |dw/dt| = " + detail::fmt_double(res) + " exceeds 1e-10 |Omega|");
    Eigen::EigenSolver<Eigen::Matrix4d> es(eom_jacobian(fp, params), false);
    std::vector<cplx> ev(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real(); });
    return ev;
}

// Closed-form lambda^2 for s1, the depleted-well states and the vortices.
inline std::vector<cplx> stability_closed_form(FixedPointClass cls, double chi, double mu, double omega) {
    const double w2 = omega * omega;
    switch (cls) {
        case FixedPointClass::S1:
            return {cplx(w2 / 3.0 * (3.0 + 4.0 * mu) * (4.0 * chi - 9.0 - 4.0 * mu))};
        case FixedPointClass::SDW_1:
        case FixedPointClass::SDW_2: {
            const double a = -(9.0 + 4.0 * mu * (10.0 + 11.0 * mu) + chi * (2.0 + chi));
            const double b = (9.0 + 16.0 * mu - chi) *
                             (9.0 + 128.0 * mu * mu * mu - 8.0 * mu * mu * (chi - 19.0) + chi * (5.0 + 3.0 * chi - chi * chi) +
                              16.0 * mu * (4.0 + chi + chi * chi));
            const cplx root = std::sqrt(cplx(b));
            return {w2 / 2.0 * (a + root), w2 / 2.0 * (a - root)};
        }
        case FixedPointClass::VORTEX_PLUS:
        case FixedPointClass::VORTEX_MINUS: {
            const double a = -104.0 * mu * mu - 16.0 * mu * (6.0 + chi) - 3.0 * (9.0 + 4.0 * chi);
            const double b = 3.0 * (3.0 + 4.0 * mu) * (3.0 + 8.0 * mu) * (3.0 + 8.0 * mu) * (9.0 + 4.0 * mu + 8.0 * chi);
            const cplx root = std::sqrt(cplx(b));
            return {w2 / 6.0 * (a + root), w2 / 6.0 * (a - root)};
        }
        default:
            throw UnsupportedError(std::string("stability_closed_form: no closed form for ") + to_string(cls) +
                                   "; use stability_numeric");
    }
}

namespace detail {

inline FixedPointRecord make_record(FixedPointClass cls, const ClassicalState& w, const ModelParams& p) {
    FixedPointRecord r;
    r.cls = cls;
    r.w = w;
    r.chi = p.chi;
    r.mu = p.mu;
    r.omega = p.omega;
    r.residual = eom_residual(w, p);
    if (cls != FixedPointClass::S2 && cls != FixedPointClass::S3 && cls != FixedPointClass::S4)
        r.lambda_squared = stability_closed_form(cls, p.chi, p.mu, p.omega);
    Eigen::EigenSolver<Eigen::Matrix4d> es(eom_jacobian(w, p), false);
    r.jacobian_eigenvalues.assign(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(r.jacobian_eigenvalues.begin(), r.jacobian_eigenvalues.end(),
              [](cplx a, cplx b) { return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real(); });
    r.verdict = classify_eigenvalues(r.jacobian_eigenvalues, p.omega);
    r.stable = r.verdict == Verdict::Stable;
    return r;
}

// Which side of the fold a three-root configuration sits on: +1 beyond chi_plus, -1 below chi_minus.
inline int fold_side(double chi, double mu) {
    if (const auto dr = try_discriminant_roots(mu)) {
        if (chi >= dr->chi_plus) return +1;
        if (chi <= dr->chi_minus) return -1;
        // Delta < 0 between the roots cannot happen for a leading coefficient of -1; fall back to the nearer root
        return std::abs(chi - dr->chi_plus) < std::abs(chi - dr->chi_minus) ? +1 : -1;
    }
    return chi >= 0.0 ? +1 : -1;
}

}  // namespace detail

// Real cubic roots labelled (s2, s3, s4); s3 and s4 absent when Delta > 0.
struct TwinCubicRoots {
    double s2{0.0};
    std::optional<double> s3, s4;
};

inline TwinCubicRoots twin_cubic_roots(double chi, double mu) {
    const auto raw = twin_cubic_raw(chi, mu);
    const std::vector<double> c = poly::trimmed(raw);
    TwinCubicRoots out;
    if (c.size() < 2) throw DomainError("twin_cubic_roots: cubic vanishes identically");
    const auto z = poly::roots(c);
    const bool three = c.size() == 4 && discriminant(chi, mu) <= 0.0;
    std::vector<double> real;
    if (three) {
        for (const auto& r : z) real.push_back(poly::polish(c, r.real()));
    } else {
        // the single real root: smallest imaginary part
        std::vector<cplx> zs = z;
        std::sort(zs.begin(), zs.end(), [](cplx a, cplx b) { return std::abs(a.imag()) < std::abs(b.imag()); });
        real.push_back(poly::polish(c, zs.front().real()));
        if (c.size() == 3 && std::abs(zs[1].imag()) < 1e-9) real.push_back(poly::polish(c, zs[1].real()));
    }
    std::sort(real.begin(), real.end());
    if (real.size() == 1) {
        out.s2 = real[0];
        return out;
    }
    const int side = detail::fold_side(chi, mu);
    if (real.size() == 3) {
        if (side > 0) {
            out.s2 = real[0];
            out.s4 = real[1];
            out.s3 = real[2];
        } else {
            out.s4 = real[0];
            out.s3 = real[1];
            out.s2 = real[2];
        }
    } else {
        // mu = -1: the quartic drops a degree and the deflated polynomial is quadratic
        out.s2 = side > 0 ? real[0] : real[1];
        out.s3 = side > 0 ? real[1] : real[0];
    }
    return out;
}

// s1, s2, s3/s4 when Delta < 0, both chart-representable depleted-well states, both vortices.
inline std::vector<FixedPointRecord> find_fixed_points(const ModelParams& params) {
    using detail::make_record;
    std::vector<FixedPointRecord> out;
    out.push_back(make_record(FixedPointClass::S1, {cplx(1.0), cplx(1.0)}, params));
    const TwinCubicRoots tr = twin_cubic_roots(params.chi, params.mu);
    out.push_back(make_record(FixedPointClass::S2, {cplx(tr.s2), cplx(tr.s2)}, params));
    if (tr.s3) out.push_back(make_record(FixedPointClass::S3, {cplx(*tr.s3), cplx(*tr.s3)}, params));
    if (tr.s4) out.push_back(make_record(FixedPointClass::S4, {cplx(*tr.s4), cplx(*tr.s4)}, params));
    out.push_back(make_record(FixedPointClass::SDW_1, {cplx(-1.0), cplx(0.0)}, params));
    out.push_back(make_record(FixedPointClass::SDW_2, {cplx(0.0), cplx(-1.0)}, params));
    out.push_back(make_record(FixedPointClass::VORTEX_PLUS, vortex_point(true), params));
    out.push_back(make_record(FixedPointClass::VORTEX_MINUS, vortex_point(false), params));
    return out;
}

inline const FixedPointRecord* find_class(const std::vector<FixedPointRecord>& recs, FixedPointClass c) {
    for (const auto& r : recs)
        if (r.cls == c) return &r;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Parameter-space maps
// ---------------------------------------------------------------------------

struct GridAxis {
    double lo{0.0};
    double hi{1.0};
    int n{2};

    double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1); }
};

struct StabilityCell {
    double chi{0.0}, mu{0.0};
    int n_real_roots{0};
    bool degenerate{false};
    bool unphysical{false};  // chi * mu < 0
    int s1{-1}, s2{-1}, s3{-1}, s4{-1}, sdw{-1}, vortex{-1};
};

struct StabilityMap {
    GridAxis chi_axis, mu_axis;
    std::vector<StabilityCell> cells;  // chi-major: index = i_chi * mu_axis.n + i_mu
};

inline StabilityCell evaluate_cell(double chi, double mu, double omega) {
    StabilityCell c;
    c.chi = chi;
    c.mu = mu;
    c.unphysical = chi * mu < 0.0;
    const TwinRootCount rc = count_twin_roots(chi, mu);
    c.n_real_roots = rc.distinct;
    c.degenerate = rc.degenerate;
    const ModelParams p{omega, 2, chi, mu};
    for (const auto& r : find_fixed_points(p)) {
        const int code = verdict_code(r.verdict);
        switch (r.cls) {
            case FixedPointClass::S1: c.s1 = code; break;
            case FixedPointClass::S2: c.s2 = code; break;
            case FixedPointClass::S3: c.s3 = code; break;
            case FixedPointClass::S4: c.s4 = code; break;
            case FixedPointClass::SDW_1: c.sdw = code; break;
            case FixedPointClass::VORTEX_PLUS: c.vortex = code; break;
            default: break;
        }
    }
    return c;
}

// Cells are evaluated by `workers` threads; the result does not depend on the worker count.
inline StabilityMap stability_map(GridAxis chi_axis, GridAxis mu_axis, double omega = -1.0, int workers = 1) {
    if (chi_axis.n < 2 || mu_axis.n < 2) throw DomainError("stability_map: resolution must be at least 2 per axis");
    if (omega == 0.0) throw DomainError("stability_map: omega must be nonzero");
    StabilityMap m{chi_axis, mu_axis, {}};
    const std::size_t total = static_cast<std::size_t>(chi_axis.n) * static_cast<std::size_t>(mu_axis.n);
    m.cells.resize(total);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            const int i = static_cast<int>(k / static_cast<std::size_t>(mu_axis.n));
            const int j = static_cast<int>(k % static_cast<std::size_t>(mu_axis.n));
            m.cells[k] = evaluate_cell(chi_axis.at(i), mu_axis.at(j), omega);
        }
    };
    const int nw = std::max(1, workers);
    std::vector<std::jthread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(work);
    work();
    return m;
}

// CSV: chi,mu,n_real_roots,s1_stable,s2_stable,s3_exists,s3_stable,s4_exists,s4_stable,sdw_stable,vortex_stable
inline void write_stability_map_csv(std::ostream& os, const StabilityMap& m) {
    using detail::fmt_double;
    os << "chi,mu,n_real_roots,s1_stable,s2_stable,s3_exists,s3_stable,s4_exists,s4_stable,sdw_stable,vortex_stable\n";
    for (const auto& c : m.cells) {
        os << fmt_double(c.chi) << ',' << fmt_double(c.mu) << ',' << c.n_real_roots << ',' << c.s1 << ',' << c.s2 << ','
           << (c.s3 >= 0 ? 1 : 0) << ',' << c.s3 << ',' << (c.s4 >= 0 ? 1 : 0) << ',' << c.s4 << ',' << c.sdw << ','
           << c.vortex << '\n';
    }
}

}  // namespace trimer
