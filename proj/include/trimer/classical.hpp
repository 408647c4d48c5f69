// classical.hpp: coherent-state (TDVP) dynamics of the trimer.
//
// The phase space is parametrized by (w1, w2) in C^2, the coherent-state
// amplitudes of modes 1 and 2 relative to mode 3.  All quantities here are per
// particle and independent of N except where a chart needs N explicitly.
#pragma once

#include "trimer/errors.hpp"
#include "trimer/model.hpp"

#include <boost/numeric/odeint.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

namespace trimer {

struct ClassicalState {
    cplx w1{0.0};
    cplx w2{0.0};

    double norm2() const { return std::norm(w1) + std::norm(w2); }
    // alpha = (|w1|^2 + |w2|^2 + 1)^{-1/2}
    double alpha() const { return 1.0 / std::sqrt(1.0 + norm2()); }
    bool finite() const {
        return std::isfinite(w1.real()) && std::isfinite(w1.imag()) && std::isfinite(w2.real()) &&
               std::isfinite(w2.imag());
    }
    // Normalized single-particle amplitudes (z1, z2, z3) = alpha (w1, w2, 1).
    std::array<cplx, 3> amplitudes() const {
        const double a = alpha();
        return {a * w1, a * w2, cplx(a)};
    }
};

// Builds a chart point from mode amplitudes (any normalization).
inline ClassicalState from_amplitudes(const std::array<cplx, 3>& a) {
    if (a[2] == cplx(0.0)) throw ChartBoundaryError("from_amplitudes: mode 3 is empty, the point lies outside the w-chart");
    return {a[0] / a[2], a[1] / a[2]};
}

// New mode i carries old mode perm[i].
inline ClassicalState relabel_modes(const ClassicalState& s, const std::array<int, 3>& perm) {
    const std::array<cplx, 3> a{s.w1, s.w2, cplx(1.0)};
    return from_amplitudes({a[static_cast<std::size_t>(perm[0])], a[static_cast<std::size_t>(perm[1])],
                            a[static_cast<std::size_t>(perm[2])]});
}

// ---------------------------------------------------------------------------
// Equations of motion
// ---------------------------------------------------------------------------

namespace detail {

// Complex value with a forward-mode derivative along one real direction.
struct DualC {
    cplx v{0.0};
    cplx d{0.0};

    DualC() = default;
    DualC(cplx value, cplx deriv = 0.0) : v(value), d(deriv) {}
    DualC(double value) : v(value) {}

    friend DualC operator+(const DualC& a, const DualC& b) { return {a.v + b.v, a.d + b.d}; }
    friend DualC operator-(const DualC& a, const DualC& b) { return {a.v - b.v, a.d - b.d}; }
    friend DualC operator*(const DualC& a, const DualC& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
    friend DualC operator/(const DualC& a, const DualC& b) {
        return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    }
    friend DualC operator*(double s, const DualC& a) { return {s * a.v, s * a.d}; }
    friend DualC operator*(cplx s, const DualC& a) { return {s * a.v, s * a.d}; }
};

inline cplx conj_of(const cplx& z) { return std::conj(z); }
inline DualC conj_of(const DualC& z) { return {std::conj(z.v), std::conj(z.d)}; }
inline cplx abs2_of(const cplx& z) { return std::norm(z); }
inline DualC abs2_of(const DualC& z) { return {std::norm(z.v), 2.0 * std::real(std::conj(z.v) * z.d)}; }

// dw_j/dt for the pair (w_j, w_k).
template <class Z>
Z eom_component(const Z& wj, const Z& wk, double omega, double chi, double mu) {
    const Z one(1.0);
    const Z nj = abs2_of(wj);
    const Z s = nj + abs2_of(wk) + one;
    const Z bracket = (1.0 + 2.0 * mu) * ((one - wj) * (wj + wk + one)) + (2.0 * chi) * (wj * (nj - one) / s) -
                      (2.0 * mu) * (((one - wj) * conj_of(wk) * (wj + wk + wj * wk) - (one + wj) * wk * (nj - one)) / s);
    return cplx(0.0, -omega) * bracket;
}

}  // namespace detail

// Time derivatives (dw1/dt, dw2/dt).  Independent of N.
inline std::array<cplx, 2> eom_rhs(const ClassicalState& s, const ModelParams& p) {
    return {detail::eom_component(s.w1, s.w2, p.omega, p.chi, p.mu),
            detail::eom_component(s.w2, s.w1, p.omega, p.chi, p.mu)};
}

inline double eom_residual(const ClassicalState& s, const ModelParams& p) {
    const auto f = eom_rhs(s, p);
    return std::sqrt(std::norm(f[0]) + std::norm(f[1]));
}

// Exact 4x4 real Jacobian in (Re w1, Im w1, Re w2, Im w2).
inline Eigen::Matrix4d eom_jacobian(const ClassicalState& s, const ModelParams& p) {
    using detail::DualC;
    Eigen::Matrix4d jac;
    const std::array<std::pair<cplx, cplx>, 4> dirs{
        std::pair{cplx(1, 0), cplx(0)}, {cplx(0, 1), cplx(0)}, {cplx(0), cplx(1, 0)}, {cplx(0), cplx(0, 1)}};
    for (int c = 0; c < 4; ++c) {
        const DualC w1(s.w1, dirs[static_cast<std::size_t>(c)].first), w2(s.w2, dirs[static_cast<std::size_t>(c)].second);
        const DualC f1 = detail::eom_component(w1, w2, p.omega, p.chi, p.mu);
        const DualC f2 = detail::eom_component(w2, w1, p.omega, p.chi, p.mu);
        jac.col(c) << f1.d.real(), f1.d.imag(), f2.d.real(), f2.d.imag();
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Conserved and derived quantities
// ---------------------------------------------------------------------------

// Mean energy per particle in the coherent state.
inline double classical_energy(const ClassicalState& s, const ModelParams& p) {
    const cplx w1 = s.w1, w2 = s.w2;
    const double n1 = std::norm(w1), n2 = std::norm(w2);
    const double den = 1.0 + n1 + n2;
    const double hop = 2.0 * std::real(std::conj(w1) * w2) + 2.0 * w1.real() + 2.0 * w2.real();
    const double self = (n1 * n1 + n2 * n2 + 1.0) / (den * den);
    const double cross = (n1 * 2.0 * w2.real() + n2 * 2.0 * w1.real() + 2.0 * std::real(std::conj(w1) * w2)) / (den * den);
    return p.omega * ((1.0 + 2.0 * p.mu) * hop / den + p.chi * self - 2.0 * p.mu * cross);
}

// <J_S>/N in the coherent state.
inline double classical_js(const ClassicalState& s) {
    return 2.0 * std::imag(s.w1 - s.w2 + std::conj(s.w1) * s.w2) / (1.0 + s.norm2());
}

// (2/N)<S_z>: imbalance between the in-phase twin mode (a1+a2)/sqrt2 and mode 3.
inline double classical_iz(const ClassicalState& s) {
    return (0.5 * std::norm(s.w1 + s.w2) - 1.0) / (1.0 + s.norm2());
}

// <a_j^+ a_j>, summing to N.
inline std::array<double, 3> classical_populations(const ClassicalState& s, int n) {
    const double den = 1.0 + s.norm2();
    return {n * std::norm(s.w1) / den, n * std::norm(s.w2) / den, n / den};
}

// Generator expectations in the coherent state |N; w1, w2>.
inline GeneratorValues classical_generators(const ClassicalState& s, int n) {
    const auto z = s.amplitudes();
    auto rho = [&](int j, int k) { return double(n) * std::conj(z[static_cast<std::size_t>(j)]) * z[static_cast<std::size_t>(k)]; };
    GeneratorValues g;
    g.q1 = 0.5 * (rho(0, 0) - rho(1, 1)).real();
    g.q2 = (rho(0, 0) + rho(1, 1) - 2.0 * rho(2, 2)).real() / 3.0;
    for (int k = 0; k < 3; ++k) {
        const int j = partner_mode(k);
        g.p[static_cast<std::size_t>(k)] = 2.0 * rho(k, j).real();
        g.j[static_cast<std::size_t>(k)] = -2.0 * rho(k, j).imag();
    }
    g.js = g.j[0] + g.j[1] + g.j[2];
    return g;
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

namespace detail {
// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}
}  // namespace detail

// w_j = sqrt(K_j / (N - K1 - K2)) exp(-i phi_j)
struct CanonicalState {
    double k1{0.0}, k2{0.0};
    double phi1{0.0}, phi2{0.0};
    int n{1};

    double k3() const { return n - k1 - k2; }
};

inline CanonicalState to_canonical(const ClassicalState& s, int n) {
    const auto pop = classical_populations(s, n);
    return {pop[0], pop[1], detail::wrap_angle(-std::arg(s.w1)), detail::wrap_angle(-std::arg(s.w2)), n};
}

inline ClassicalState from_canonical(const CanonicalState& c) {
    if (c.k1 < 0.0 || c.k2 < 0.0) throw DomainError("from_canonical: negative occupation");
    const double k3 = c.k3();
    if (!(k3 > 0.0)) throw ChartBoundaryError("from_canonical: K1 + K2 >= N lies on the chart boundary");
    return {std::polar(std::sqrt(c.k1 / k3), -c.phi1), std::polar(std::sqrt(c.k2 / k3), -c.phi2)};
}

// w_j = (q_j + i p_j) / sqrt(2N - q1^2 - p1^2 - q2^2 - p2^2)
struct CartesianState {
    double q1{0.0}, p1{0.0}, q2{0.0}, p2{0.0};
    int n{1};

    double radius2() const { return q1 * q1 + p1 * p1 + q2 * q2 + p2 * p2; }
};

inline CartesianState to_cartesian(const ClassicalState& s, int n) {
    const double scale = std::sqrt(2.0 * n / (1.0 + s.norm2()));
    return {scale * s.w1.real(), scale * s.w1.imag(), scale * s.w2.real(), scale * s.w2.imag(), n};
}

inline ClassicalState from_cartesian(const CartesianState& c) {
    const double gap = 2.0 * c.n - c.radius2();
    if (!(gap > 0.0)) throw ChartBoundaryError("from_cartesian: q1^2+p1^2+q2^2+p2^2 must stay below 2N");
    const double inv = 1.0 / std::sqrt(gap);
    return {cplx(c.q1, c.p1) * inv, cplx(c.q2, c.p2) * inv};
}

// Twin surface w1 = w2 mapped on the unit sphere; theta is measured from the south pole.
struct SpherePoint {
    double theta{0.0};
    double phi{0.0};
    std::array<double, 3> i{0.0, 0.0, -1.0};
};

inline constexpr double kTwinTolerance = 1e-9;

inline SpherePoint sphere_coords(const ClassicalState& s) {
    if (std::abs(s.w1 - s.w2) > kTwinTolerance)
        throw DomainError("sphere_coords: state is off the twin surface (|w1 - w2| > 1e-9)");
    // sqrt2 w1 = exp(-i phi) tan(theta/2)
    const cplx zeta = std::sqrt(2.0) * s.w1;
    SpherePoint sp;
    sp.theta = 2.0 * std::atan(std::abs(zeta));
    sp.phi = detail::wrap_angle(-std::arg(zeta));
    const double st = std::sin(sp.theta);
    sp.i = {st * std::cos(sp.phi), st * std::sin(sp.phi), -std::cos(sp.theta)};
    return sp;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double sample_dt = 0.05;
    double chart_limit = 1e8;  // abort once |w1|^2 + |w2|^2 exceeds this
};

using RealState = std::array<double, 4>;

inline RealState to_real(const ClassicalState& s) { return {s.w1.real(), s.w1.imag(), s.w2.real(), s.w2.imag()}; }
inline ClassicalState from_real(const RealState& x) { return {cplx(x[0], x[1]), cplx(x[2], x[3])}; }

// Adaptive Dormand-Prince 5(4) stepper with dense output on (Re w1, Im w1, Re w2, Im w2).
// Every accepted step is checked against the chart limit.
class ClassicalStepper {
public:
    ClassicalStepper(const ClassicalState& s0, const ModelParams& params, double t0, const IntegratorOptions& opts)
        : params_(params), opts_(opts),
          stepper_(boost::numeric::odeint::make_dense_output(
              opts.abs_tol, opts.rel_tol, boost::numeric::odeint::runge_kutta_dopri5<RealState>())) {
        if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0))
            throw DomainError("integrate: tolerances must be positive");
        if (!s0.finite()) throw DomainError("integrate: non-finite initial state");
        const double scale = std::max(1.0, params.abs_omega() * (1.0 + std::abs(params.chi) + std::abs(params.mu)));
        stepper_.initialize(to_real(s0), t0, 1e-3 / scale);
    }

    double time() const { return stepper_.current_time(); }
    double previous_time() const { return stepper_.previous_time(); }
    ClassicalState state() const { return from_real(stepper_.current_state()); }

    // Dense-output interpolation inside the last step.
    ClassicalState state_at(double t) const {
        RealState x;
        stepper_.calc_state(t, x);
        return from_real(x);
    }

    // Advances one accepted step; returns its time interval.
    std::pair<double, double> step() {
        auto sys = [this](const RealState& x, RealState& dxdt, double) {
            const auto f = eom_rhs(from_real(x), params_);
            dxdt = {f[0].real(), f[0].imag(), f[1].real(), f[1].imag()};
        };
        std::pair<double, double> span;
        try {
            span = stepper_.do_step(sys);
        } catch (const boost::numeric::odeint::step_adjustment_error&) {
            throw ChartOverflowError(time(), "integrate: step-size adjustment failed");
        }
        const ClassicalState s = state();
        if (!s.finite() || s.norm2() > opts_.chart_limit)
            throw ChartOverflowError(time(), "integrate: trajectory left the w-chart (|w|^2 above limit)");
        const double dt = stepper_.current_time_step();
        if (dt < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(time())))
            throw ChartOverflowError(time(), "integrate: step size underflow");
        return span;
    }

private:
    ModelParams params_;
    IntegratorOptions opts_;
    boost::numeric::odeint::dense_output_runge_kutta<
        boost::numeric::odeint::controlled_runge_kutta<boost::numeric::odeint::runge_kutta_dopri5<RealState>>>
        stepper_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ClassicalState> states;
    std::vector<double> energy;  // per particle
    double max_energy_drift{0.0};  // max |E(t) - E(0)| / |E(0)|, or absolute in units of |Omega| when E(0) ~ 0
    bool converged{true};
};

inline double relative_drift(double e, double e0, double omega_scale) {
    const double den = std::abs(e0) > 1e-8 * omega_scale ? std::abs(e0) : omega_scale;
    return std::abs(e - e0) / den;
}

// Integrates from t = 0 to t_end, sampling every opts.sample_dt (plus t_end).
// The trajectory is flagged non-converged when the energy drift exceeds 100 rel_tol.
inline Trajectory integrate(const ClassicalState& s0, const ModelParams& params, double t_end,
                            const IntegratorOptions& opts = {}) {
    if (!(t_end > 0.0)) throw DomainError("integrate: t_end must be positive");
    if (!(opts.sample_dt > 0.0)) throw DomainError("integrate: sample_dt must be positive");
    Trajectory tr;
    const double e0 = classical_energy(s0, params);
    auto record = [&](double t, const ClassicalState& s) {
        const double e = classical_energy(s, params);
        tr.times.push_back(t);
        tr.states.push_back(s);
        tr.energy.push_back(e);
        tr.max_energy_drift = std::max(tr.max_energy_drift, relative_drift(e, e0, params.abs_omega()));
    };
    record(0.0, s0);

    ClassicalStepper stepper(s0, params, 0.0, opts);
    std::size_t k = 1;
    auto sample_time = [&](std::size_t i) { return std::min(t_end, double(i) * opts.sample_dt); };
    while (tr.times.back() < t_end) {
        stepper.step();
        while (k * opts.sample_dt < t_end + 0.5 * opts.sample_dt && sample_time(k) <= stepper.time()) {
            const double ts = sample_time(k);
            if (ts > tr.times.back()) record(ts, stepper.state_at(ts));
            ++k;
        }
        if (stepper.time() >= t_end && tr.times.back() < t_end) record(t_end, stepper.state_at(t_end));
    }
    tr.converged = tr.max_energy_drift < 100.0 * opts.rel_tol;
    return tr;
}

// CSV: t,re_w1,im_w1,re_w2,im_w2,K1,K2,K3,phi1,phi2,energy,js
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, int n) {
    using detail::fmt_double;
    os << "t,re_w1,im_w1,re_w2,im_w2,K1,K2,K3,phi1,phi2,energy,js\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const ClassicalState& s = tr.states[i];
        const CanonicalState c = to_canonical(s, n);
        os << fmt_double(tr.times[i]) << ',' << fmt_double(s.w1.real()) << ',' << fmt_double(s.w1.imag()) << ','
           << fmt_double(s.w2.real()) << ',' << fmt_double(s.w2.imag()) << ',' << fmt_double(c.k1) << ','
           << fmt_double(c.k2) << ',' << fmt_double(c.k3()) << ',' << fmt_double(c.phi1) << ',' << fmt_double(c.phi2)
           << ',' << fmt_double(tr.energy[i]) << ',' << fmt_double(classical_js(s)) << '\n';
    }
}

}  // namespace trimer
