// quantum.hpp: exact N-particle dynamics in the three-mode Fock space.
#pragma once

#include "trimer/classical.hpp"
#include "trimer/errors.hpp"
#include "trimer/model.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/numeric/odeint.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <vector>

namespace trimer {

// Shared, cached basis per particle number.
inline std::shared_ptr<const FockBasis> shared_basis(int n) {
    static std::mutex mtx;
    static std::map<int, std::shared_ptr<const FockBasis>> cache;
    std::lock_guard lock(mtx);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const FockBasis>(n);
    return slot;
}

class QuantumState {
public:
    QuantumState(std::shared_ptr<const FockBasis> basis, Eigen::VectorXcd amps)
        : basis_(std::move(basis)), amps_(std::move(amps)) {
        if (!basis_) throw DomainError("QuantumState: null basis");
        if (static_cast<std::size_t>(amps_.size()) != basis_->size())
            throw DomainError("QuantumState: amplitude vector does not match the basis dimension");
    }

    const FockBasis& basis() const { return *basis_; }
    const std::shared_ptr<const FockBasis>& basis_ptr() const { return basis_; }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    int n_particles() const { return basis_->n_particles(); }
    double norm() const { return amps_.norm(); }

    QuantumState normalized() const { return {basis_, amps_ / amps_.norm()}; }

private:
    std::shared_ptr<const FockBasis> basis_;
    Eigen::VectorXcd amps_;
};

inline QuantumState fock_state(int n, const Occupation& occ) {
    auto basis = shared_basis(n);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis->size()));
    v(static_cast<Eigen::Index>(basis->index(occ))) = 1.0;
    return {basis, v};
}

// |N; w1, w2> = sum sqrt(N!/(n1! n2! n3!)) w1^n1 w2^n2 alpha^N |n1, n2, n3>, built in log space.
inline QuantumState coherent_state(int n, cplx w1, cplx w2) {
    if (n < 1) throw DomainError("coherent_state: n must be >= 1");
    const ClassicalState s{w1, w2};
    if (!s.finite()) throw DomainError("coherent_state: non-finite amplitude");
    auto basis = shared_basis(n);
    const double log_alpha = -0.5 * std::log1p(s.norm2());
    const double lf_n = std::lgamma(n + 1.0);
    const double l1 = std::log(std::abs(w1)), l2 = std::log(std::abs(w2));
    const double a1 = std::arg(w1), a2 = std::arg(w2);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(basis->size()));
    for (std::size_t i = 0; i < basis->size(); ++i) {
        const auto& o = (*basis)[i];
        if ((o[0] > 0 && w1 == cplx(0.0)) || (o[1] > 0 && w2 == cplx(0.0))) {
            v(static_cast<Eigen::Index>(i)) = 0.0;
            continue;
        }
        double lg = 0.5 * (lf_n - std::lgamma(o[0] + 1.0) - std::lgamma(o[1] + 1.0) - std::lgamma(o[2] + 1.0)) + n * log_alpha;
        if (o[0] > 0) lg += o[0] * l1;
        if (o[1] > 0) lg += o[1] * l2;
        v(static_cast<Eigen::Index>(i)) = std::polar(std::exp(lg), o[0] * a1 + o[1] * a2);
    }
    v /= v.norm();
    return {basis, v};
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

// Hamiltonian and every operator needed for the expectation set, built once per run.
struct QuantumOperators {
    std::shared_ptr<const FockBasis> basis;
    OperatorMatrix h;
    GeneratorSet gens;
    std::array<OperatorMatrix, 3> number;
    OperatorMatrix sz;  // (b1^+ b1 - b2^+ b2)/2
    OperatorMatrix b3;  // b3^+ b3 = (a1^+ - a2^+)(a1 - a2)/2

    static QuantumOperators build(const ModelParams& params) {
        params.check();
        QuantumOperators ops;
        ops.basis = shared_basis(params.n);
        const FockBasis& b = *ops.basis;
        ops.h = build_hamiltonian(params, b);
        ops.gens = generator_matrices(b);
        for (int j = 0; j < 3; ++j) ops.number[static_cast<std::size_t>(j)] = number_operator(b, j);
        const OperatorMatrix& p12 = ops.gens.p[1];  // a2^+ a1 + a1^+ a2
        const OperatorMatrix pair = ops.number[0] + ops.number[1];
        ops.sz = 0.25 * (pair + p12) - 0.5 * ops.number[2];
        ops.b3 = 0.5 * (pair - p12);
        return ops;
    }
};

struct ExpectationSet {
    double time{0.0};
    std::array<double, 3> populations{};
    GeneratorValues generators;
    double js{0.0};
    double iz{0.0};  // (2/N) <S_z>
    double b3{0.0};
    double purity{0.0};
    double energy{0.0};  // <H>
};

// 9/N^2 [<Q1>^2/3 + <Q2>^2/4 + sum <P_j>^2/12 + sum <J_j>^2/12]
inline double purity_from_generators(const GeneratorValues& g, int n) {
    double s = g.q1 * g.q1 / 3.0 + g.q2 * g.q2 / 4.0;
    for (int k = 0; k < 3; ++k)
        s += (g.p[static_cast<std::size_t>(k)] * g.p[static_cast<std::size_t>(k)] +
              g.j[static_cast<std::size_t>(k)] * g.j[static_cast<std::size_t>(k)]) / 12.0;
    return 9.0 * s / (double(n) * double(n));
}

inline GeneratorValues generator_expectations(const Eigen::VectorXcd& psi, const GeneratorSet& g) {
    GeneratorValues v;
    v.q1 = g.q1.expectation(psi).real();
    v.q2 = g.q2.expectation(psi).real();
    for (std::size_t k = 0; k < 3; ++k) {
        v.p[k] = g.p[k].expectation(psi).real();
        v.j[k] = g.j[k].expectation(psi).real();
    }
    v.js = v.j[0] + v.j[1] + v.j[2];
    return v;
}

inline ExpectationSet expectations(const QuantumState& state, const QuantumOperators& ops, double time = 0.0) {
    if (state.basis().n_particles() != ops.basis->n_particles())
        throw DomainError("expectations: operator set built for a different N");
    const Eigen::VectorXcd& psi = state.amplitudes();
    const int n = state.n_particles();
    ExpectationSet e;
    e.time = time;
    for (std::size_t j = 0; j < 3; ++j) e.populations[j] = ops.number[j].expectation(psi).real();
    e.generators = generator_expectations(psi, ops.gens);
    e.js = e.generators.js;
    e.iz = 2.0 / n * ops.sz.expectation(psi).real();
    e.b3 = ops.b3.expectation(psi).real();
    e.purity = purity_from_generators(e.generators, n);
    e.energy = ops.h.expectation(psi).real();
    return e;
}

inline double purity(const QuantumState& state) {
    return purity_from_generators(generator_expectations(state.amplitudes(), generator_matrices(state.basis())),
                                  state.n_particles());
}

// ---------------------------------------------------------------------------
// Twin-condensate basis
// ---------------------------------------------------------------------------

// Change of single-particle basis b1 = (a1+a2)/sqrt2, b2 = a3, b3 = (a1-a2)/sqrt2 lifted to Fock space.
// The map is block diagonal in n3 = m2.  Within the block L = n1 + n2 = m1 + m3,
//   <m1, m2, m3 | n1, n2, n3> = c(n1, m3) sqrt(m1! m3! / (n1! n2!)) / 2^(L/2)
// with c(n1, m3) the x^m3 coefficient of (1+x)^n1 (1-x)^n2, evaluated in exact integers.
class TwinTransform {
public:
    explicit TwinTransform(int n) : n_(n) {
        using boost::multiprecision::cpp_int;
        blocks_.resize(static_cast<std::size_t>(n) + 1);
        for (int l = 0; l <= n; ++l) {
            Eigen::MatrixXd& blk = blocks_[static_cast<std::size_t>(l)];
            blk.resize(l + 1, l + 1);  // (m3, n1)
            // (1 - x)^l
            std::vector<cpp_int> poly(static_cast<std::size_t>(l) + 1);
            poly[0] = 1;
            for (int k = 1; k <= l; ++k) poly[static_cast<std::size_t>(k)] = -poly[static_cast<std::size_t>(k - 1)] * (l - k + 1) / k;
            for (int n1 = 0; n1 <= l; ++n1) {
                const int n2 = l - n1;
                for (int m3 = 0; m3 <= l; ++m3) {
                    const int m1 = l - m3;
                    const long double lw = 0.5L * (std::lgamma((long double)m1 + 1) + std::lgamma((long double)m3 + 1) -
                                                   std::lgamma((long double)n1 + 1) - std::lgamma((long double)n2 + 1)) -
                                           0.5L * l * std::log(2.0L);
                    const long double c = poly[static_cast<std::size_t>(m3)].convert_to<long double>();
                    blk(m3, n1) = static_cast<double>(c * std::exp(lw));
                }
                if (n1 == l) break;
                // multiply by (1 + x) / (1 - x)
                std::vector<cpp_int> q(poly.size());
                for (std::size_t k = 0; k < poly.size(); ++k) q[k] = poly[k] + (k > 0 ? poly[k - 1] : cpp_int(0));
                cpp_int acc = 0;
                for (std::size_t k = 0; k < poly.size(); ++k) {
                    acc += q[k];
                    poly[k] = acc;
                }
            }
        }
    }

    static std::shared_ptr<const TwinTransform> cached(int n) {
        static std::mutex mtx;
        static std::map<int, std::shared_ptr<const TwinTransform>> cache;
        std::lock_guard lock(mtx);
        auto& slot = cache[n];
        if (!slot) slot = std::make_shared<const TwinTransform>(n);
        return slot;
    }

    int n_particles() const { return n_; }
    const Eigen::MatrixXd& block(int l) const { return blocks_.at(static_cast<std::size_t>(l)); }

    // a-basis amplitudes to b-basis amplitudes; the b-basis uses the same enumeration order with (m1, m2, m3).
    Eigen::VectorXcd apply(const QuantumState& s) const {
        const FockBasis& basis = s.basis();
        if (basis.n_particles() != n_) throw DomainError("TwinTransform: state has a different N");
        const Eigen::VectorXcd& a = s.amplitudes();
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(a.size());
        for (int n3 = 0; n3 <= n_; ++n3) {
            const int l = n_ - n3;
            Eigen::VectorXcd in(l + 1);
            for (int n1 = 0; n1 <= l; ++n1) in(n1) = a(static_cast<Eigen::Index>(basis.index({n1, l - n1, n3})));
            const Eigen::VectorXcd res = block(l).cast<cplx>() * in;
            for (int m3 = 0; m3 <= l; ++m3) out(static_cast<Eigen::Index>(basis.index({l - m3, n3, m3}))) = res(m3);
        }
        return out;
    }

private:
    int n_;
    std::vector<Eigen::MatrixXd> blocks_;
};

inline Eigen::VectorXcd twin_transform(const QuantumState& s) { return TwinTransform::cached(s.n_particles())->apply(s); }

// <b3^+ b3> from the b-basis amplitudes.
inline double b3_occupation(const QuantumState& s) {
    const Eigen::VectorXcd b = twin_transform(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.basis().size(); ++i) acc += s.basis()[i][2] * std::norm(b(static_cast<Eigen::Index>(i)));
    return acc;
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

struct PropagationOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double sample_dt = 0.05;
    int max_failed_steps = 500;
};

struct PropagationReport {
    std::size_t samples{0};
    double max_norm_drift{0.0};
    double max_energy_drift{0.0};  // relative to max(|<H>(0)|, |Omega|)
    bool converged{true};
};

namespace detail {
using SplitVector = std::vector<double>;

inline SplitVector split(const Eigen::VectorXcd& v) {
    SplitVector x(static_cast<std::size_t>(2 * v.size()));
    Eigen::Map<Eigen::VectorXcd>(reinterpret_cast<cplx*>(x.data()), v.size()) = v;
    return x;
}

inline Eigen::Map<const Eigen::VectorXcd> as_complex(const SplitVector& x) {
    return {reinterpret_cast<const cplx*>(x.data()), static_cast<Eigen::Index>(x.size() / 2)};
}
}  // namespace detail

using SampleObserver = std::function<void(double, const QuantumState&)>;

// Solves i d|psi>/dt = H |psi> with an adaptive Runge-Kutta-Fehlberg 7(8) scheme, reporting at
// every multiple of sample_dt and at t_end.  Samples are renormalized when the norm drift is
// below 1e-8; larger drift or energy drift above 1e-8 marks the run as non-converged.
inline PropagationReport propagate(const QuantumState& state, const OperatorMatrix& h, double t_end,
                                   const PropagationOptions& opts, const SampleObserver& observe,
                                   double energy_scale = 1.0) {
    namespace odeint = boost::numeric::odeint;
    if (h.dim() != state.basis().size()) throw DomainError("propagate: Hamiltonian dimension does not match the state");
    if (!(t_end >= 0.0) || !(opts.sample_dt > 0.0)) throw DomainError("propagate: t_end >= 0 and sample_dt > 0 required");
    if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) throw DomainError("propagate: tolerances must be positive");

    const SparseMatrix& hm = h.sparse();
    const Eigen::Index dim = static_cast<Eigen::Index>(h.dim());
    auto sys = [&hm, dim](const detail::SplitVector& x, detail::SplitVector& dxdt, double) {
        Eigen::Map<Eigen::VectorXcd> out(reinterpret_cast<cplx*>(dxdt.data()), dim);
        out.noalias() = cplx(0.0, -1.0) * (hm * detail::as_complex(x));
    };

    auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_fehlberg78<detail::SplitVector>());
    detail::SplitVector x = detail::split(state.amplitudes() / state.norm());
    PropagationReport rep;
    const double e0 = h.expectation(detail::as_complex(x)).real();
    const double e_scale = std::max(std::abs(e0), std::abs(energy_scale));

    auto emit = [&](double t) {
        Eigen::VectorXcd psi = detail::as_complex(x);
        const double nrm = psi.norm();
        const double drift = std::abs(nrm - 1.0);
        rep.max_norm_drift = std::max(rep.max_norm_drift, drift);
        if (drift < 1e-8) {
            psi /= nrm;
            x = detail::split(psi);
        } else {
            rep.converged = false;
        }
        const double e = h.expectation(psi).real() / psi.squaredNorm();
        rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(e - e0) / e_scale);
        if (rep.max_energy_drift > 1e-8) rep.converged = false;
        ++rep.samples;
        if (observe) observe(t, QuantumState(state.basis_ptr(), std::move(psi)));
    };

    double t = 0.0;
    double dt = std::min(opts.sample_dt, 0.01 / std::max(1e-300, h.max_abs()));
    emit(0.0);
    std::size_t k = 1;
    while (t < t_end) {
        const double target = std::min(t_end, double(k) * opts.sample_dt);
        int fails = 0;
        while (t < target) {
            double step = std::min(dt, target - t);
            const bool clamped = step < dt;
            const double before = dt;
            dt = step;
            if (stepper.try_step(sys, x, t, dt) == odeint::fail) {
                if (++fails > opts.max_failed_steps) throw NonConvergenceError("propagate: step size control failed");
                continue;
            }
            fails = 0;
            // a step shortened to hit the sample time should not shrink the next one
            if (clamped) dt = std::max(dt, before);
            if (target - t < 1e-12 * std::max(1.0, target)) t = target;
        }
        emit(t);
        ++k;
    }
    return rep;
}

// Collects every sample.
inline std::vector<std::pair<double, QuantumState>> propagate(const QuantumState& state, const OperatorMatrix& h,
                                                              double t_end, const PropagationOptions& opts = {},
                                                              PropagationReport* report = nullptr) {
    std::vector<std::pair<double, QuantumState>> out;
    const auto rep = propagate(state, h, t_end, opts, [&](double t, const QuantumState& s) { out.emplace_back(t, s); });
    if (report) *report = rep;
    return out;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

// CSV: t,n1,n2,n3,iz,js,purity,b3,energy
inline void write_quantum_header(std::ostream& os) { os << "t,n1,n2,n3,iz,js,purity,b3,energy\n"; }

inline void write_quantum_row(std::ostream& os, const ExpectationSet& e) {
    using detail::fmt_double;
    os << fmt_double(e.time) << ',' << fmt_double(e.populations[0]) << ',' << fmt_double(e.populations[1]) << ','
       << fmt_double(e.populations[2]) << ',' << fmt_double(e.iz) << ',' << fmt_double(e.js) << ','
       << fmt_double(e.purity) << ',' << fmt_double(e.b3) << ',' << fmt_double(e.energy) << '\n';
}

// CSV: index,n1,n2,n3,re,im
inline void write_state_csv(std::ostream& os, const QuantumState& s) {
    using detail::fmt_double;
    os << "index,n1,n2,n3,re,im\n";
    for (std::size_t i = 0; i < s.basis().size(); ++i) {
        const auto& o = s.basis()[i];
        const cplx a = s.amplitudes()(static_cast<Eigen::Index>(i));
        os << i << ',' << o[0] << ',' << o[1] << ',' << o[2] << ',' << fmt_double(a.real()) << ',' << fmt_double(a.imag())
           << '\n';
    }
}

}  // namespace trimer
