#include "oracles.hpp"
#include "trimer/model.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace trimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("collision rates from trap geometry", "[model]") {
    TrapGeometry g;
    g.q0 = 2.0;
    g.d = 1.0;
    g.v0 = 3.0;
    const auto r = derive_collision_rates(g);
    CHECK_THAT(r.epsilon, WithinRel(std::exp(-3.0), 1e-14));
    CHECK_THAT(r.epsilon, WithinAbs(0.049787, 1e-6));
    CHECK_THAT(r.lambda / r.kappa, WithinRel(std::pow(r.epsilon, 1.5), 1e-14));
    CHECK_THAT(r.kappa, WithinRel(3.0 / (std::pow(2.0, 2.5) * std::pow(std::numbers::pi, 1.5)), 1e-14));

    g.q0 = 100.0;
    const auto far = derive_collision_rates(g);
    CHECK(far.epsilon == 0.0);
    CHECK(far.lambda == 0.0);

    TrapGeometry bad = g;
    bad.d = 0.0;
    CHECK_THROWS_AS(derive_collision_rates(bad), DomainError);
    bad = g;
    bad.q0 = -1.0;
    CHECK_THROWS_AS(derive_collision_rates(bad), DomainError);
}

TEST_CASE("trap geometry validation", "[model]") {
    TrapGeometry g;
    g.q0 = 2.0;
    g.d = 1.0;
    g.v0 = 1.0;
    CHECK(g.validate().size() == 1);  // q0 < 3d
    g.q0 = 4.0;
    CHECK(g.validate().empty());

    g.mass = 2.0;
    g.scattering_length = 1.0;
    CHECK_THROWS_AS(g.validate(), DomainError);
    g.v0 = 4.0 * std::numbers::pi * 1.0 / 2.0;
    CHECK_NOTHROW(g.validate());

    TrapGeometry from_a;
    from_a.q0 = 4.0;
    from_a.d = 1.0;
    from_a.mass = 2.0;
    from_a.scattering_length = 0.5;
    CHECK_THAT(from_a.interaction_strength(), WithinRel(std::numbers::pi, 1e-15));
    TrapGeometry none;
    none.q0 = 4.0;
    none.d = 1.0;
    CHECK_THROWS_AS(none.interaction_strength(), DomainError);
}

TEST_CASE("params from rates", "[model]") {
    const int n = 30;
    const double omega = -1.0;
    const auto a = params_from_rates(omega, omega / (n - 1), 0.0, n);
    CHECK_THAT(a.params.chi, WithinAbs(1.0, 1e-15));
    CHECK(a.params.mu == 0.0);
    CHECK_FALSE(a.collisions_ignored);

    const ModelParams target = ModelParams::make(-1.0, 30, 4.0, 0.0);
    CHECK_THAT(target.kappa(), WithinRel(-4.0 / 29.0, 1e-15));
    CHECK_THAT(target.kappa(), WithinAbs(-0.137931, 1e-6));

    const auto single = params_from_rates(-1.0, 0.3, 0.1, 1);
    CHECK(single.collisions_ignored);
    CHECK(single.params.chi == 0.0);
    CHECK(single.params.mu == 0.0);

    CHECK_THROWS_AS(params_from_rates(0.0, 1.0, 1.0, 3), DomainError);
    CHECK_THROWS_AS(params_from_rates(1.0, 1.0, 1.0, 0), DomainError);

    // round trip through the derived rates
    const ModelParams p = ModelParams::make(0.7, 12, -2.5, 0.3);
    const auto back = params_from_rates(p.omega, p.kappa(), p.lambda(), p.n);
    CHECK_THAT(back.params.chi, WithinRel(p.chi, 1e-14));
    CHECK_THAT(back.params.mu, WithinRel(p.mu, 1e-14));
}

TEST_CASE("model parameter checks and flags", "[model]") {
    CHECK_THROWS_AS(ModelParams::make(0.0, 3, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ModelParams::make(1.0, 0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ModelParams::make(1.0, 3, std::nan(""), 0.0), DomainError);
    CHECK(ModelParams::make(-1.0, 30, 5.0, -0.05).unphysical_signs());
    CHECK_FALSE(ModelParams::make(-1.0, 30, 5.0, 0.05).unphysical_signs());
    const ModelParams p = ModelParams::make(-1.0, 30, 4.0, 0.4);
    CHECK_THAT(p.omega_eff(), WithinRel(-1.8, 1e-14));
}

TEST_CASE("params config round trip", "[model]") {
    TrapGeometry g;
    g.q0 = 4.0;
    g.d = 1.25;
    g.v0 = 0.1;
    const ModelParams p = ModelParams::make(-1.0, 30, 4.0, 0.04);
    const std::string text = to_kv(p, g);
    const ParamsConfig cfg = from_kv(text);
    CHECK(cfg.params.omega == p.omega);
    CHECK(cfg.params.n == p.n);
    CHECK(cfg.params.chi == p.chi);
    CHECK(cfg.params.mu == p.mu);
    REQUIRE(cfg.trap);
    CHECK(cfg.trap->q0 == 4.0);
    CHECK(cfg.trap->d == 1.25);
    CHECK(cfg.trap->v0 == 0.1);
    CHECK(to_kv(cfg.params, cfg.trap) == text);

    CHECK_THROWS_AS(from_kv("omega = abc\n"), DomainError);
    const ParamsConfig comments = from_kv("# header\nomega = 2\n\nn = 4  \nchi=1\nmu = -0.5\n");
    CHECK(comments.params.omega == 2.0);
    CHECK(comments.params.n == 4);
    CHECK(comments.params.mu == -0.5);
}

TEST_CASE("Fock basis enumeration", "[model]") {
    const FockBasis b(4);
    CHECK(b.size() == 15);
    CHECK(FockBasis::dimension(30) == 496);
    CHECK(b[0] == Occupation{4, 0, 0});
    CHECK(b[1] == Occupation{3, 1, 0});
    CHECK(b[2] == Occupation{3, 0, 1});
    CHECK(b[b.size() - 1] == Occupation{0, 0, 4});
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index(b[i]) == i);
    // lexicographically descending in (n1, n2)
    for (std::size_t i = 1; i < b.size(); ++i)
        CHECK((b[i - 1][0] > b[i][0] || (b[i - 1][0] == b[i][0] && b[i - 1][1] > b[i][1])));
    CHECK_THROWS_AS(b.index({1, 1, 1}), DomainError);
    CHECK_THROWS_AS(FockBasis(0), DomainError);
    const FockBasis one(1);
    CHECK(one[0] == Occupation{1, 0, 0});
    CHECK(one[1] == Occupation{0, 1, 0});
    CHECK(one[2] == Occupation{0, 0, 1});
}

TEST_CASE("single-particle Hamiltonian", "[model]") {
    const FockBasis b(1);
    for (double mu : {0.0, 0.3}) {
        const ModelParams p = ModelParams::make(-1.0, 1, 2.0, mu);
        const Eigen::MatrixXcd h = build_hamiltonian(p, b).to_dense();
        const double om = p.omega_eff();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK_THAT(std::abs(h(i, j) - (i == j ? 0.0 : om)), WithinAbs(0.0, 1e-15));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 3);
        std::vector<double> want{2.0 * om, -om, -om};
        std::sort(ev.begin(), ev.end());
        std::sort(want.begin(), want.end());
        for (int i = 0; i < 3; ++i) CHECK_THAT(ev[static_cast<std::size_t>(i)], WithinAbs(want[static_cast<std::size_t>(i)], 1e-13));
        if (mu == 0.0) CHECK_THAT(ev[2] - ev[0], WithinAbs(3.0, 1e-13));
    }
}

TEST_CASE("Hamiltonian matches the ladder-operator oracle", "[model]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int n : {2, 3, 5}) {
        const ModelParams p = ModelParams::make(u(rng), n, u(rng), u(rng) / 3.0);
        const FockBasis b(n);
        const oracle::Basis ob(n);
        const Eigen::MatrixXcd lib = build_hamiltonian(p, b).to_dense();
        const Eigen::MatrixXcd ref = oracle::hamiltonian(ob, p);
        // permute library rows/cols into the oracle order
        Eigen::MatrixXcd perm = Eigen::MatrixXcd::Zero(lib.rows(), lib.cols());
        for (std::size_t i = 0; i < b.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                perm(ob.index.at(b[i]), ob.index.at(b[j])) = lib(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        CHECK(max_abs(perm - ref) < 1e-12);
    }
}

TEST_CASE("linear Hamiltonian commutes with total tunneling", "[model]") {
    for (int n : {2, 5, 9}) {
        const FockBasis b(n);
        const ModelParams p = ModelParams::make(-1.3, n, 0.0, 0.0);
        const Eigen::MatrixXcd h = build_hamiltonian(p, b).to_dense();
        const GeneratorSet g = generator_matrices(b);
        const Eigen::MatrixXcd ps = (g.p[0] + g.p[1] + g.p[2]).to_dense();
        CHECK((h * ps - ps * h).norm() < 1e-12);
    }
}

TEST_CASE("generator matrices", "[model]") {
    const int n = 3;
    const FockBasis b(n);
    const GeneratorSet g = generator_matrices(b);
    const Eigen::MatrixXcd q1 = g.q1.to_dense(), q2 = g.q2.to_dense();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        CHECK_THAT(q1(idx, idx).real(), WithinAbs(0.5 * (b[i][0] - b[i][1]), 1e-15));
        CHECK_THAT(q2(idx, idx).real(), WithinAbs((b[i][0] + b[i][1] - 2.0 * b[i][2]) / 3.0, 1e-15));
    }
    CHECK(max_abs(q1 - Eigen::MatrixXcd(q1.diagonal().asDiagonal())) == 0.0);
    const auto last = static_cast<Eigen::Index>(b.index({0, 0, n}));
    CHECK_THAT(q2(last, last).real(), WithinAbs(-2.0 * n / 3.0, 1e-15));

    // [P_k, J_k] = 2i (n_j - n_k) with j the partner mode
    for (int k = 0; k < 3; ++k) {
        const int j = partner_mode(k);
        const Eigen::MatrixXcd pk = g.p[static_cast<std::size_t>(k)].to_dense();
        const Eigen::MatrixXcd jk = g.j[static_cast<std::size_t>(k)].to_dense();
        Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(pk.rows(), pk.cols());
        for (std::size_t i = 0; i < b.size(); ++i)
            want(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = cplx(0.0, 2.0 * (b[i][static_cast<std::size_t>(j)] - b[i][static_cast<std::size_t>(k)]));
        CHECK(max_abs(pk * jk - jk * pk - want) < 1e-13);
    }

    // partner convention: P1 couples modes 1 and 3, P2 modes 2 and 1, P3 modes 3 and 2
    CHECK(partner_mode(0) == 2);
    CHECK(partner_mode(1) == 0);
    CHECK(partner_mode(2) == 1);
    const oracle::Basis ob(n);
    for (int k = 0; k < 3; ++k) {
        const int j = partner_mode(k);
        const Eigen::MatrixXcd ref = oracle::hop(ob, k, j) + oracle::hop(ob, j, k);
        const Eigen::MatrixXcd lib = g.p[static_cast<std::size_t>(k)].to_dense();
        double err = 0.0;
        for (std::size_t r = 0; r < b.size(); ++r)
            for (std::size_t c = 0; c < b.size(); ++c)
                err = std::max(err, std::abs(lib(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) -
                                             ref(ob.index.at(b[r]), ob.index.at(b[c]))));
        CHECK(err < 1e-14);
    }

    std::vector<const OperatorMatrix*> all{&g.q1, &g.q2, &g.p[0], &g.p[1], &g.p[2], &g.j[0], &g.j[1], &g.j[2], &g.js};
    for (const auto* m : all) CHECK(m->hermiticity_residual() < 1e-15);
}

TEST_CASE("the two Hamiltonian forms differ by a multiple of the identity", "[model]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int n : {2, 3, 4}) {
        for (int rep = 0; rep < 5; ++rep) {
            const ModelParams p = ModelParams::make(-1.0, n, u(rng), u(rng) / 4.0);
            const FockBasis b(n);
            const Eigen::MatrixXcd diff =
                build_hamiltonian(p, b).to_dense() - build_hamiltonian_generator_form(p, generator_matrices(b)).to_dense();
            const cplx shift = diff.trace() / double(diff.rows());
            const Eigen::MatrixXcd off = diff - shift * Eigen::MatrixXcd::Identity(diff.rows(), diff.cols());
            CHECK(off.norm() < 1e-12);
            CHECK_THAT(shift.real(), WithinAbs(generator_form_identity_shift(p), 1e-12));
        }
    }
}

TEST_CASE("Hamiltonian symmetry and sparsity", "[model]") {
    const int n = 6;
    const FockBasis b(n);
    const ModelParams p = ModelParams::make(-1.0, n, 3.7, 0.21);
    const OperatorMatrix h = build_hamiltonian(p, b);
    CHECK(h.hermiticity_residual() < 1e-15);
    const Eigen::MatrixXcd u = mode_permutation(b, {1, 0, 2}).to_dense();
    const Eigen::MatrixXcd hd = h.to_dense();
    CHECK(max_abs(u * hd * u.adjoint() - hd) < 1e-13);
    CHECK(h.max_row_nonzeros() == 7);

    const FockBasis b1(1);
    CHECK(build_hamiltonian(ModelParams::make(-1.0, 1, 0.0, 0.0), b1).max_row_nonzeros() == 2);
    CHECK_THROWS_AS(build_hamiltonian(p, b1), DomainError);
}

TEST_CASE("observables", "[model]") {
    const int n = 4;
    const FockBasis b(n);
    TrapGeometry g;
    g.q0 = 4.0;
    g.d = 1.0;
    g.v0 = 1.0;
    const ObservableSet o0 = observable_matrices(b, g, 0.0);
    const auto all1 = static_cast<Eigen::Index>(b.index({n, 0, 0}));
    const Eigen::MatrixXcd x = o0.x.to_dense();
    CHECK_THAT(x(all1, all1).real(), WithinAbs(-g.q0 * n / 2.0, 1e-13));
    CHECK(o0.px.max_abs() == 0.0);
    CHECK(o0.py.max_abs() == 0.0);
    CHECK(o0.lz.max_abs() == 0.0);

    const double eps = 0.02;
    const ObservableSet o = observable_matrices(b, g, eps);
    const GeneratorSet gens = generator_matrices(b);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.size()));
    psi(0) = 0.6;
    psi(1) = cplx(0.0, 0.8);
    const double js = gens.js.expectation(psi).real();
    REQUIRE(std::abs(js) > 1e-6);
    CHECK_THAT(o.lz.expectation(psi).real() / js, WithinRel(std::sqrt(3.0) * eps * g.q0 * g.q0 / (4.0 * g.d * g.d), 1e-12));
    for (const auto* m : {&o.x, &o.y, &o.px, &o.py, &o.lz}) CHECK(m->hermiticity_residual() < 1e-15);
}

TEST_CASE("coordinate-list export", "[model]") {
    const FockBasis b(1);
    const OperatorMatrix h = build_hamiltonian(ModelParams::make(-1.0, 1, 0.0, 0.0), b);
    std::ostringstream os;
    h.write_coo(os);
    std::istringstream in(os.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int r = -1, c = -1;
        double re = 0.0, im = 1.0;
        ls >> r >> c >> re >> im;
        CHECK(r != c);
        CHECK(re == -1.0);
        CHECK(im == 0.0);
        ++rows;
    }
    CHECK(rows == 6);
}
