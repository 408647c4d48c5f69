// model.hpp: parameters, three-mode Fock basis, Hamiltonian and su(3) generator matrices.
//
// Conventions
//   * hbar = 1.  Modes are numbered 1, 2, 3 in the docs and 0, 1, 2 in code.
//   * The Fock basis for N bosons lists (n1, n2, n3) lexicographically descending
//     in (n1, n2):  (N,0,0), (N-1,1,0), (N-1,0,1), ..., (0,0,N).
//   * Spectra are defined up to the N-dependent constant dropped from the
//     many-body Hamiltonian; only differences and dynamics are physical.
#pragma once

#include "trimer/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace trimer {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Trap geometry and collision rates
// ---------------------------------------------------------------------------

struct TrapGeometry {
    double q0{0.0};  // distance from each minimum to the trap centre
    double d{0.0};   // Gaussian width sqrt(1/(m w))
    std::optional<double> v0;                 // contact strength 4 pi a / m
    std::optional<double> omega_trap;
    std::optional<double> mass;
    std::optional<double> scattering_length;

    // V0, either given directly or from (a, m).
    double interaction_strength() const {
        if (v0) return *v0;
        if (scattering_length && mass) return 4.0 * std::numbers::pi * *scattering_length / *mass;
        throw DomainError("TrapGeometry: neither v0 nor (scattering_length, mass) given");
    }

    // Throws on invalid geometry; returns non-fatal warnings.
    std::vector<std::string> validate() const {
        if (!(q0 > 0.0) || !(d > 0.0))
            throw DomainError("TrapGeometry: q0 and d must be positive");
        std::vector<std::string> warnings;
        if (q0 < 3.0 * d) warnings.emplace_back("q0 < 3d: localized-mode approximation is poor");
        if (v0 && scattering_length && mass) {
            const double from_a = 4.0 * std::numbers::pi * *scattering_length / *mass;
            const double scale = std::max(std::abs(*v0), std::abs(from_a));
            if (scale > 0.0 && std::abs(*v0 - from_a) > 1e-12 * scale)
                throw DomainError("TrapGeometry: v0 inconsistent with 4 pi a / m");
        }
        return warnings;
    }
};

struct CollisionRates {
    double epsilon;  // overlap <u_j|u_k>
    double kappa;    // self-collision rate
    double lambda;   // cross-collision rate
};

inline CollisionRates derive_collision_rates(const TrapGeometry& g) {
    g.validate();
    const double eps = std::exp(-3.0 * g.q0 * g.q0 / (4.0 * g.d * g.d));
    const double kappa =
        g.interaction_strength() / (std::pow(2.0, 2.5) * std::pow(std::numbers::pi, 1.5) * g.d * g.d * g.d);
    return {eps, kappa, kappa * std::pow(eps, 1.5)};
}

// ---------------------------------------------------------------------------
// Model parameters
// ---------------------------------------------------------------------------

struct ModelParams {
    double omega{-1.0};  // tunneling rate
    int n{1};            // particle number
    double chi{0.0};     // kappa (N-1) / omega
    double mu{0.0};      // lambda (N-1) / omega

    static ModelParams make(double omega, int n, double chi, double mu) {
        ModelParams p{omega, n, chi, mu};
        p.check();
        return p;
    }

    void check() const {
        if (n < 1) throw DomainError("ModelParams: n must be >= 1");
        if (!std::isfinite(omega) || omega == 0.0)
            throw DomainError("ModelParams: omega must be finite and non-zero");
        if (!std::isfinite(chi) || !std::isfinite(mu))
            throw DomainError("ModelParams: chi and mu must be finite");
    }

    // With a single particle there are no collisions; chi and mu are ignored.
    bool collisions_ignored() const { return n == 1; }
    // A physical trap gives chi and mu of the same sign.
    bool unphysical_signs() const { return chi * mu < 0.0; }

    double kappa() const { return n > 1 ? chi * omega / (n - 1) : 0.0; }
    double lambda() const { return n > 1 ? mu * omega / (n - 1) : 0.0; }
    // Omega' = Omega + 2 Lambda (N - 1)
    double omega_eff() const { return omega + 2.0 * lambda() * (n - 1); }
    double abs_omega() const { return std::abs(omega); }
};

struct RatesConversion {
    ModelParams params;
    bool collisions_ignored;
};

inline RatesConversion params_from_rates(double omega, double kappa, double lambda, int n) {
    if (omega == 0.0) throw DomainError("params_from_rates: omega = 0 leaves chi, mu undefined");
    if (n < 1) throw DomainError("params_from_rates: n must be >= 1");
    if (n == 1) return {ModelParams::make(omega, 1, 0.0, 0.0), true};
    return {ModelParams::make(omega, n, kappa * (n - 1) / omega, lambda * (n - 1) / omega), false};
}

// ---------------------------------------------------------------------------
// Flat key-value config:  "key = value" per line, '#' comments.
// Keys: omega, n, chi, mu, trap.q0, trap.d, trap.v0, trap.omega, trap.mass, trap.a
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, std::string_view key) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DomainError("config: bad number for '" + std::string(key) + "'");
    return v;
}
}  // namespace detail

struct ParamsConfig {
    ModelParams params;
    std::optional<TrapGeometry> trap;
};

inline std::string to_kv(const ModelParams& p, const std::optional<TrapGeometry>& trap = std::nullopt) {
    using detail::fmt_double;
    std::ostringstream os;
    os << "omega = " << fmt_double(p.omega) << '\n'
       << "n = " << p.n << '\n'
       << "chi = " << fmt_double(p.chi) << '\n'
       << "mu = " << fmt_double(p.mu) << '\n';
    if (trap) {
        os << "trap.q0 = " << fmt_double(trap->q0) << '\n' << "trap.d = " << fmt_double(trap->d) << '\n';
        if (trap->v0) os << "trap.v0 = " << fmt_double(*trap->v0) << '\n';
        if (trap->omega_trap) os << "trap.omega = " << fmt_double(*trap->omega_trap) << '\n';
        if (trap->mass) os << "trap.mass = " << fmt_double(*trap->mass) << '\n';
        if (trap->scattering_length) os << "trap.a = " << fmt_double(*trap->scattering_length) << '\n';
    }
    return os.str();
}

using KeyValues = std::map<std::string, std::string, std::less<>>;

namespace detail {
// "key = value" lines; '#' starts a comment.
inline KeyValues parse_kv_lines(std::string_view text) {
    KeyValues kv;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw DomainError("config: expected 'key = value'");
        kv[std::string(detail::trim(line.substr(0, eq)))] = std::string(detail::trim(line.substr(eq + 1)));
    }
    return kv;
}
}  // namespace detail

inline ParamsConfig from_kv(std::string_view text) {
    const KeyValues kv = detail::parse_kv_lines(text);
    auto get = [&](std::string_view key) -> std::optional<double> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return detail::parse_double(it->second, key);
    };
    for (const char* key : {"omega", "n", "chi", "mu"})
        if (!kv.contains(key)) throw DomainError(std::string("config: missing key '") + key + "'");

    const double n = *get("n");
    if (n != std::floor(n)) throw DomainError("config: n must be an integer");
    ParamsConfig out{ModelParams::make(*get("omega"), static_cast<int>(n), *get("chi"), *get("mu")), std::nullopt};
    if (kv.contains("trap.q0") || kv.contains("trap.d")) {
        TrapGeometry g;
        g.q0 = get("trap.q0").value_or(0.0);
        g.d = get("trap.d").value_or(0.0);
        g.v0 = get("trap.v0");
        g.omega_trap = get("trap.omega");
        g.mass = get("trap.mass");
        g.scattering_length = get("trap.a");
        g.validate();
        out.trap = g;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fock basis
// ---------------------------------------------------------------------------

using Occupation = std::array<int, 3>;

class FockBasis {
public:
    explicit FockBasis(int n) : n_(n) {
        if (n < 1) throw DomainError("FockBasis: n must be >= 1");
        states_.reserve(dimension(n));
        for (int n1 = n; n1 >= 0; --n1)
            for (int n2 = n - n1; n2 >= 0; --n2) states_.push_back({n1, n2, n - n1 - n2});
    }

    static std::size_t dimension(int n) { return static_cast<std::size_t>(n + 1) * (n + 2) / 2; }

    int n_particles() const { return n_; }
    std::size_t size() const { return states_.size(); }
    const Occupation& operator[](std::size_t i) const { return states_[i]; }
    const std::vector<Occupation>& states() const { return states_; }

    // Inverse of operator[]; the occupation must sum to N.
    std::size_t index(const Occupation& occ) const {
        if (occ[0] < 0 || occ[1] < 0 || occ[2] < 0 || occ[0] + occ[1] + occ[2] != n_)
            throw DomainError("FockBasis::index: occupation does not belong to this basis");
        const std::size_t m = static_cast<std::size_t>(n_ - occ[0]);
        return m * (m + 1) / 2 + (m - static_cast<std::size_t>(occ[1]));
    }

private:
    int n_;
    std::vector<Occupation> states_;
};

// ---------------------------------------------------------------------------
// Operator matrices
// ---------------------------------------------------------------------------

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Sparse complex matrix on a Fock basis.  Entries are stored row-major, sorted by
// column, so iteration order is deterministic.
class OperatorMatrix {
public:
    OperatorMatrix() = default;
    explicit OperatorMatrix(SparseMatrix m) : m_(std::move(m)) {
        m_.prune(cplx(0.0));
        m_.makeCompressed();
    }

    static OperatorMatrix from_triplets(std::size_t dim, const std::vector<Eigen::Triplet<cplx>>& t) {
        SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        m.setFromTriplets(t.begin(), t.end());
        return OperatorMatrix(std::move(m));
    }

    static OperatorMatrix identity(std::size_t dim) {
        SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        m.setIdentity();
        return OperatorMatrix(std::move(m));
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    std::size_t nonzeros() const { return static_cast<std::size_t>(m_.nonZeros()); }
    const SparseMatrix& sparse() const { return m_; }

    Eigen::MatrixXcd to_dense() const { return Eigen::MatrixXcd(m_); }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const { return m_ * x; }

    // <x|A|x> for a normalized x.
    cplx expectation(const Eigen::VectorXcd& x) const { return x.dot(m_ * x); }

    std::size_t max_row_nonzeros() const {
        std::size_t best = 0;
        for (Eigen::Index r = 0; r < m_.outerSize(); ++r)
            best = std::max<std::size_t>(best, static_cast<std::size_t>(m_.outerIndexPtr()[r + 1] - m_.outerIndexPtr()[r]));
        return best;
    }

    // max |A - A^dagger| / max |A|
    double hermiticity_residual() const {
        const double scale = max_abs();
        if (scale == 0.0) return 0.0;
        const SparseMatrix d = m_ - SparseMatrix(m_.adjoint());
        double worst = 0.0;
        for (Eigen::Index k = 0; k < d.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
        return worst / scale;
    }

    double max_abs() const {
        double m = 0.0;
        for (Eigen::Index k = 0; k < m_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(m_, k); it; ++it) m = std::max(m, std::abs(it.value()));
        return m;
    }

    // Coordinate list: "row col re im" per line.
    void write_coo(std::ostream& os) const {
        for (Eigen::Index r = 0; r < m_.outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(m_, r); it; ++it)
                os << it.row() << ' ' << it.col() << ' ' << detail::fmt_double(it.value().real()) << ' '
                   << detail::fmt_double(it.value().imag()) << '\n';
    }

    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
        return OperatorMatrix(SparseMatrix(a.m_ + b.m_));
    }
    friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
        return OperatorMatrix(SparseMatrix(a.m_ - b.m_));
    }
    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
        return OperatorMatrix(SparseMatrix(a.m_ * b.m_));
    }
    friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return OperatorMatrix(SparseMatrix(s * a.m_)); }
    friend OperatorMatrix operator*(double s, const OperatorMatrix& a) { return cplx(s) * a; }

private:
    SparseMatrix m_;
};

// a_j^dagger a_k on the basis (0-based mode indices).
inline OperatorMatrix hop_operator(const FockBasis& basis, int j, int k) {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(basis.size());
    for (std::size_t col = 0; col < basis.size(); ++col) {
        Occupation occ = basis[col];
        if (occ[k] == 0) continue;
        if (j == k) {
            t.emplace_back(col, col, cplx(occ[j]));
            continue;
        }
        const double amp = std::sqrt(double(occ[k]) * double(occ[j] + 1));
        --occ[k];
        ++occ[j];
        t.emplace_back(basis.index(occ), col, cplx(amp));
    }
    return OperatorMatrix::from_triplets(basis.size(), t);
}

inline OperatorMatrix number_operator(const FockBasis& basis, int j) { return hop_operator(basis, j, j); }

// Unitary relabeling of modes: the new mode i carries the old mode perm[i].
inline OperatorMatrix mode_permutation(const FockBasis& basis, const std::array<int, 3>& perm) {
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(basis.size());
    for (std::size_t col = 0; col < basis.size(); ++col) {
        const Occupation& occ = basis[col];
        const Occupation out{occ[perm[0]], occ[perm[1]], occ[perm[2]]};
        t.emplace_back(basis.index(out), col, cplx(1.0));
    }
    return OperatorMatrix::from_triplets(basis.size(), t);
}

// ---------------------------------------------------------------------------
// su(3) generators
// ---------------------------------------------------------------------------

// Partner mode of generator k in P_k, J_k:  j = (k+1) mod 3 + 1 with 1-based labels.
constexpr int partner_mode(int k) { return (k + 2) % 3; }

struct GeneratorSet {
    OperatorMatrix q1;  // (n1 - n2)/2
    OperatorMatrix q2;  // (n1 + n2 - 2 n3)/3
    std::array<OperatorMatrix, 3> p;  // a_k^+ a_j + a_j^+ a_k
    std::array<OperatorMatrix, 3> j;  // i (a_k^+ a_j - a_j^+ a_k)
    OperatorMatrix js;                // J1 + J2 + J3
};

inline GeneratorSet generator_matrices(const FockBasis& basis) {
    const OperatorMatrix n1 = number_operator(basis, 0), n2 = number_operator(basis, 1), n3 = number_operator(basis, 2);
    GeneratorSet g;
    g.q1 = 0.5 * (n1 - n2);
    g.q2 = (1.0 / 3.0) * (n1 + n2 - 2.0 * n3);
    for (int k = 0; k < 3; ++k) {
        const int pj = partner_mode(k);
        const OperatorMatrix kj = hop_operator(basis, k, pj), jk = hop_operator(basis, pj, k);
        g.p[static_cast<std::size_t>(k)] = kj + jk;
        g.j[static_cast<std::size_t>(k)] = cplx(0.0, 1.0) * (kj - jk);
    }
    g.js = g.j[0] + g.j[1] + g.j[2];
    return g;
}

// Expectation values of the eight generators plus J_S.
struct GeneratorValues {
    double q1{0.0}, q2{0.0};
    std::array<double, 3> p{}, j{};
    double js{0.0};
};

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

// H = Omega' sum_{j!=k} a_j^+ a_k + kappa sum_j a_j^+2 a_j^2 - 2 Lambda sum~ a_j^+ a_j a_k^+ a_m
// The last sum runs over three distinct indices, so every hop a_k^+ a_m carries the
// occupation of the remaining mode.  At most seven entries per row.
inline OperatorMatrix build_hamiltonian(const ModelParams& params, const FockBasis& basis) {
    if (basis.n_particles() != params.n) throw DomainError("build_hamiltonian: basis built for a different N");
    const double omega_eff = params.omega_eff(), kappa = params.kappa(), lambda = params.lambda();
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(7 * basis.size());
    for (std::size_t col = 0; col < basis.size(); ++col) {
        const Occupation& occ = basis[col];
        double diag = 0.0;
        for (int j = 0; j < 3; ++j) diag += kappa * occ[j] * (occ[j] - 1);
        if (diag != 0.0) t.emplace_back(col, col, cplx(diag));
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                if (j == k || occ[k] == 0) continue;
                const int third = 3 - j - k;
                const double coeff = omega_eff - 2.0 * lambda * occ[third];
                if (coeff == 0.0) continue;
                Occupation out = occ;
                --out[k];
                ++out[j];
                t.emplace_back(basis.index(out), col, cplx(coeff * std::sqrt(double(occ[k]) * double(occ[j] + 1))));
            }
        }
    }
    return OperatorMatrix::from_triplets(basis.size(), t);
}

// Same Hamiltonian written through the generators:
//   (Omega' - 2 Lambda N/3)(P1+P2+P3) + kappa/2 (4 Q1^2 + 3 Q2^2)
//   + Lambda [2 Q1 (P1 - P3) + Q2 (2 P2 - P1 - P3)]
// It differs from build_hamiltonian by kappa (N^2/3 - N) times the identity.
inline OperatorMatrix build_hamiltonian_generator_form(const ModelParams& params, const GeneratorSet& g) {
    const double n = params.n, kappa = params.kappa(), lambda = params.lambda();
    const OperatorMatrix psum = g.p[0] + g.p[1] + g.p[2];
    return (params.omega_eff() - 2.0 * lambda * n / 3.0) * psum +
           (kappa / 2.0) * (4.0 * (g.q1 * g.q1) + 3.0 * (g.q2 * g.q2)) +
           lambda * (2.0 * (g.q1 * (g.p[0] - g.p[2])) + g.q2 * (2.0 * g.p[1] - g.p[0] - g.p[2]));
}

inline double generator_form_identity_shift(const ModelParams& params) {
    const double n = params.n;
    return params.kappa() * (n * n / 3.0 - n);
}

// ---------------------------------------------------------------------------
// Observables (first order in epsilon)
// ---------------------------------------------------------------------------

struct ObservableSet {
    OperatorMatrix x, y;    // condensate position
    OperatorMatrix px, py;  // linear momentum
    OperatorMatrix lz;      // angular momentum along the trap axis
};

// Wells at r1 = (-q0/2, sqrt3 q0/2), r2 = (-q0/2, -sqrt3 q0/2), r3 = (q0, 0).
inline ObservableSet observable_matrices(const GeneratorSet& g, const TrapGeometry& geom, double epsilon) {
    geom.validate();
    const double q0 = geom.q0, d2 = geom.d * geom.d, s3 = std::sqrt(3.0);
    ObservableSet o;
    o.x = (-1.5 * q0) * g.q2 + (epsilon * q0 / 2.0) * (0.5 * (g.p[0] + g.p[2]) - g.p[1]);
    o.y = (s3 * q0) * g.q1 + (s3 * epsilon * q0 / 4.0) * (g.p[0] - g.p[2]);
    o.px = (3.0 * epsilon * q0 / (4.0 * d2)) * (g.j[2] - g.j[0]);
    o.py = (s3 * epsilon * q0 / (4.0 * d2)) * (g.j[0] + g.j[2] - 2.0 * g.j[1]);
    o.lz = (s3 * epsilon * q0 * q0 / (4.0 * d2)) * g.js;
    return o;
}

inline ObservableSet observable_matrices(const FockBasis& basis, const TrapGeometry& geom, double epsilon) {
    return observable_matrices(generator_matrices(basis), geom, epsilon);
}

}  // namespace trimer
