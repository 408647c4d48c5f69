#include "oracles.hpp"
#include "trimer/equilibria.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace trimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Closest squared Jacobian eigenvalue, relative distance.
double match_lambda2(cplx l2, const std::vector<cplx>& eig) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : eig) best = std::min(best, std::abs(l * l - l2) / std::max(1.0, std::abs(l2)));
    return best;
}

}  // namespace

TEST_CASE("twin quartic and its cubic factor", "[equilibria]") {
    const auto q = twin_quartic_coeffs(0.0, 0.0);
    CHECK(q == std::array<double, 5>{4.0, -2.0, 0.0, -1.0, -1.0});

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double chi = u(rng), mu = u(rng) / 10.0;
        const auto c = twin_quartic_coeffs(chi, mu);
        CHECK(std::abs(c[0] + c[1] + c[2] + c[3] + c[4]) < 1e-12);
        const auto raw = twin_cubic_raw(chi, mu);
        const auto monic = twin_cubic_coeffs(chi, mu);
        for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(raw[i] / raw[0], WithinAbs(monic[i], 1e-12));
        CHECK_THAT(monic[1], WithinAbs((1.0 - chi - 2.0 * mu) / (2.0 * (1.0 + mu)), 1e-12));
        CHECK_THAT(monic[2], WithinAbs((1.0 - chi + mu) / (2.0 * (1.0 + mu)), 1e-12));
        CHECK_THAT(monic[3], WithinAbs((1.0 + 2.0 * mu) / (4.0 * (1.0 + mu)), 1e-12));
    }
    CHECK_THROWS_AS(twin_cubic_coeffs(1.0, -1.0), DomainError);
}

TEST_CASE("discriminant", "[equilibria]") {
    CHECK(discriminant(0.0, 0.0) == 18.0);
    const auto c = discriminant_chi_coeffs(0.3);
    CHECK_THAT(poly::eval(std::vector<double>(c.begin(), c.end()), 1.7), WithinRel(discriminant(1.7, 0.3), 1e-13));
}

TEST_CASE("discriminant sign agrees with a brute-force root count", "[equilibria]") {
    int checked = 0;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double chi = -10.0 + 20.0 * (i + 0.5) / 50.0;
            const double mu = -0.95 + 1.95 * (j + 0.5) / 50.0;
            const double d = discriminant(chi, mu);
            if (std::abs(d) < 1e-6) continue;
            const int roots = oracle::count_real_roots_by_scan(twin_cubic_coeffs(chi, mu));
            CHECK(roots == (d > 0.0 ? 1 : 3));
            ++checked;
        }
    }
    CHECK(checked > 2400);
}

TEST_CASE("discriminant roots", "[equilibria]") {
    const auto r = discriminant_roots(0.0);
    CHECK_THAT(r.chi_plus, WithinAbs(1.971, 1e-3));
    CHECK(r.chi_minus < 0.0);
    CHECK(std::abs(discriminant(r.chi_plus, 0.0)) < 1e-9);
    CHECK(std::abs(discriminant(r.chi_minus, 0.0)) < 1e-9);
    // a scan of Delta(chi, 0) on its own finds the same two sign changes
    std::vector<double> changes;
    double prev = discriminant(-50.0, 0.0);
    for (int i = 1; i <= 100000; ++i) {
        const double chi = -50.0 + 100.0 * i / 100000;
        const double v = discriminant(chi, 0.0);
        if ((prev < 0) != (v < 0)) changes.push_back(chi);
        prev = v;
    }
    REQUIRE(changes.size() == 2);
    CHECK_THAT(r.chi_minus, WithinAbs(changes[0], 1e-3));
    CHECK_THAT(r.chi_plus, WithinAbs(changes[1], 1e-3));

    for (double mu : {-0.4, 0.0, 0.25, 0.9}) {
        const auto dr = discriminant_roots(mu);
        for (double chi : {dr.chi_minus, dr.chi_plus}) {
            const double delta = 1e-6;
            CHECK(discriminant(chi - delta, mu) * discriminant(chi + delta, mu) < 0.0);
        }
    }
    try {
        discriminant_roots(-0.8);
        FAIL("expected a bracketing failure");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("chi in [") != std::string::npos);
    }
    CHECK_FALSE(try_discriminant_roots(-0.8).has_value());
}

TEST_CASE("fixed points at the documented parameters", "[equilibria]") {
    const auto a = find_fixed_points(ModelParams::make(-1.0, 30, 1.5, 0.0));
    CHECK(a.size() == 6);
    CHECK(find_class(a, FixedPointClass::S3) == nullptr);
    CHECK(find_class(a, FixedPointClass::S4) == nullptr);

    const auto b = find_fixed_points(ModelParams::make(-1.0, 30, 1.98, 0.0));
    CHECK(b.size() == 8);
    REQUIRE(find_class(b, FixedPointClass::S3));
    REQUIRE(find_class(b, FixedPointClass::S4));

    const auto c = find_fixed_points(ModelParams::make(-1.0, 30, 2.25, 0.0));
    REQUIRE(find_class(c, FixedPointClass::S3));
    CHECK_THAT(find_class(c, FixedPointClass::S3)->w.w1.real(), WithinAbs(1.0, 1e-7));
    CHECK(count_twin_roots(2.25, 0.0).degenerate);

    const auto d = find_fixed_points(ModelParams::make(-1.0, 30, 3.0, 0.0));
    CHECK(d.size() == 8);
    CHECK(find_class(d, FixedPointClass::S1)->verdict == Verdict::Unstable);
}

TEST_CASE("every fixed point satisfies the equations of motion", "[equilibria]") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-10.0, 10.0), um(-1.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const double mu = um(rng);
        if (std::abs(mu + 1.0) < 1e-3) continue;
        for (const auto& r : find_fixed_points(ModelParams::make(rep % 3 ? -1.0 : 1.0, 30, u(rng), mu))) {
            CHECK(r.residual < kFixedPointResidual);
            CHECK(eom_residual(r.w, ModelParams::make(r.omega, 30, r.chi, r.mu)) < kFixedPointResidual);
        }
    }
}

TEST_CASE("closed-form stability", "[equilibria]") {
    const auto s1 = stability_closed_form(FixedPointClass::S1, 0.0, 0.0, -1.0);
    REQUIRE(s1.size() == 1);
    CHECK_THAT(s1[0].real(), WithinAbs(-9.0, 1e-14));
    for (double mu : {-0.3, 0.0, 0.5}) {
        const auto m = stability_closed_form(FixedPointClass::S1, 2.25 + mu, mu, -1.0);
        CHECK(std::abs(m[0]) < 1e-12);
        CHECK(classify_lambda_squared(m, -1.0) == Verdict::Marginal);
    }
    for (double mu : {-0.2, 0.1, 0.6}) {
        // vortex: stable above chi = -(4 mu + 9)/8, marginal on chi = 2 mu (6 + 11 mu)/(3 + 4 mu)
        const double edge = -(4.0 * mu + 9.0) / 8.0;
        CHECK(classify_lambda_squared(stability_closed_form(FixedPointClass::VORTEX_PLUS, edge + 1e-6, mu, -1.0), -1.0) == Verdict::Stable);
        CHECK(classify_lambda_squared(stability_closed_form(FixedPointClass::VORTEX_PLUS, edge - 1e-6, mu, -1.0), -1.0) == Verdict::Unstable);
        const double zero = 2.0 * mu * (6.0 + 11.0 * mu) / (3.0 + 4.0 * mu);
        CHECK(classify_lambda_squared(stability_closed_form(FixedPointClass::VORTEX_PLUS, zero, mu, -1.0), -1.0) == Verdict::Marginal);
    }
    CHECK_THROWS_AS(stability_closed_form(FixedPointClass::S2, 1.0, 0.0, -1.0), UnsupportedError);
    CHECK_THROWS_AS(stability_closed_form(FixedPointClass::S3, 1.0, 0.0, -1.0), UnsupportedError);
    CHECK_THROWS_AS(stability_closed_form(FixedPointClass::S4, 1.0, 0.0, -1.0), UnsupportedError);
}

TEST_CASE("numerical stability", "[equilibria]") {
    const ModelParams p0 = ModelParams::make(-1.0, 30, 0.0, 0.0);
    const auto ev = stability_numeric({cplx(1.0), cplx(1.0)}, p0);
    REQUIRE(ev.size() == 4);
    CHECK(match_lambda2(cplx(-9.0), ev) < 1e-12);
    CHECK(classify_eigenvalues(ev, -1.0) == Verdict::Stable);

    // eigenvalues come in +/- pairs
    const ModelParams p = ModelParams::make(-1.0, 30, 3.1, 0.2);
    for (const auto& r : find_fixed_points(p))
        for (const auto& l : r.jacobian_eigenvalues) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : r.jacobian_eigenvalues) best = std::min(best, std::abs(l + m));
            CHECK(best < 1e-8 * std::max(1.0, std::abs(l)));
        }

    const auto vortex = stability_numeric(vortex_point(true), ModelParams::make(-1.0, 30, -1.0, -0.01));
    CHECK(classify_eigenvalues(vortex, -1.0) == Verdict::Stable);

    CHECK_THROWS_AS(stability_numeric({cplx(0.3), cplx(0.1)}, p), NotAFixedPointError);
}

TEST_CASE("depleted-well state on chi = mu", "[equilibria]") {
    // On this curve one lambda^2 branch vanishes and the zero eigenvalue is defective, so the
    // linearization cannot certify stability.
    for (double chi : {-3.0, -0.5, 0.4, 2.0}) {
        const ModelParams p = ModelParams::make(-1.0, 30, chi, chi);
        const auto l2 = stability_closed_form(FixedPointClass::SDW_1, chi, chi, -1.0);
        CHECK(std::min(std::abs(l2[0]), std::abs(l2[1])) < 1e-12);
        const auto* rec = find_class(find_fixed_points(p), FixedPointClass::SDW_1);
        REQUIRE(rec);
        CHECK(rec->verdict != Verdict::Stable);
        const Eigen::Matrix4d jac = eom_jacobian(rec->w, p);
        Eigen::FullPivLU<Eigen::Matrix4d> lu(jac);
        lu.setThreshold(1e-10);
        CHECK(lu.rank() == 3);
    }
}

TEST_CASE("closed form agrees with the numerical linearization", "[equilibria]") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(-10.0, 10.0), um(-1.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const ModelParams p = ModelParams::make(-1.0, 30, u(rng), um(rng));
        for (const auto& r : find_fixed_points(p)) {
            for (const auto& l2 : r.lambda_squared) CHECK(match_lambda2(l2, r.jacobian_eigenvalues) < 1e-8);
            if (!r.lambda_squared.empty() && r.verdict != Verdict::Marginal)
                CHECK(classify_lambda_squared(r.lambda_squared, p.omega) == r.verdict);
        }
    }
}

TEST_CASE("branch labels follow continuation from large |chi|", "[equilibria]") {
    // Labels far from the fold are fixed by stability: s4 stable, s3 unstable.  Continuation
    // towards the fold must keep each label on its own branch.
    for (double mu : {-0.3, 0.0, 0.1, 0.5}) {
        const auto dr = discriminant_roots(mu);
        for (int side : {+1, -1}) {
            const double far = side > 0 ? 12.0 : dr.chi_minus - 8.0;
            const double near = side > 0 ? dr.chi_plus + 1e-3 : dr.chi_minus - 1e-3;
            const ModelParams pf = ModelParams::make(-1.0, 30, far, mu);
            const auto recs = find_fixed_points(pf);
            const auto* s3 = find_class(recs, FixedPointClass::S3);
            const auto* s4 = find_class(recs, FixedPointClass::S4);
            const auto* s2 = find_class(recs, FixedPointClass::S2);
            REQUIRE(s3);
            REQUIRE(s4);
            CHECK(s3->verdict == Verdict::Unstable);
            CHECK(s4->verdict == Verdict::Stable);
            CHECK(s2->verdict == (side > 0 ? Verdict::Unstable : Verdict::Stable));
            for (double chi : {near, 0.5 * (near + far)}) {
                const auto r = twin_cubic_roots(chi, mu);
                REQUIRE(r.s3);
                REQUIRE(r.s4);
                const auto t3 = oracle::continue_root(mu, far, s3->w.w1.real(), chi);
                const auto t4 = oracle::continue_root(mu, far, s4->w.w1.real(), chi);
                const auto t2 = oracle::continue_root(mu, far, s2->w.w1.real(), chi);
                REQUIRE(t2);
                CHECK_THAT(r.s2, WithinAbs(*t2, 1e-8));
                if (t3) CHECK_THAT(*r.s3, WithinAbs(*t3, 1e-6));
                if (t4) CHECK_THAT(*r.s4, WithinAbs(*t4, 1e-6));
            }
        }
        // s2 persists continuously through the single-root window
        const double mid = 0.5 * (dr.chi_minus + dr.chi_plus);
        const auto s2mid = twin_cubic_roots(mid, mu).s2;
        const auto tracked = oracle::continue_root(mu, mid, s2mid, dr.chi_plus + 0.5);
        REQUIRE(tracked);
        CHECK_THAT(twin_cubic_roots(dr.chi_plus + 0.5, mu).s2, WithinAbs(*tracked, 1e-8));
    }
}

TEST_CASE("s3 and s4 merge at the fold", "[equilibria]") {
    for (double mu : {0.0, 0.2}) {
        const auto dr = discriminant_roots(mu);
        double prev = std::numeric_limits<double>::infinity();
        for (double delta : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4}) {
            const auto r = twin_cubic_roots(dr.chi_plus + delta, mu);
            REQUIRE(r.s3);
            REQUIRE(r.s4);
            const double gap = std::abs(*r.s3 - *r.s4);
            CHECK(gap < prev);
            prev = gap;
        }
        CHECK(prev < 0.05);
        const auto inside = twin_cubic_roots(dr.chi_plus - 1e-4, mu);
        CHECK_FALSE(inside.s3.has_value());
    }
}

TEST_CASE("fixed-point symmetries", "[equilibria]") {
    const auto recs = find_fixed_points(ModelParams::make(-1.0, 30, 2.7, 0.3));
    const auto* a = find_class(recs, FixedPointClass::SDW_1);
    const auto* b = find_class(recs, FixedPointClass::SDW_2);
    const ClassicalState swapped = relabel_modes(a->w, {1, 0, 2});
    CHECK(swapped.w1 == b->w.w1);
    CHECK(swapped.w2 == b->w.w2);
    CHECK(a->verdict == b->verdict);
    const auto* vp = find_class(recs, FixedPointClass::VORTEX_PLUS);
    const auto* vm = find_class(recs, FixedPointClass::VORTEX_MINUS);
    CHECK(vp->w.w1 == std::conj(vm->w.w1));
    CHECK(vp->w.w2 == std::conj(vm->w.w2));
}

TEST_CASE("real-root census", "[equilibria]") {
    CHECK(count_twin_roots(0.0, 0.0).distinct == 2);
    CHECK(count_twin_roots(3.0, 0.0).distinct == 4);
    CHECK(count_twin_roots(-5.0, -0.05).distinct == 2);
    CHECK(count_twin_roots(-8.0, -0.05).distinct == 4);
    const auto deg = count_twin_roots(2.25, 0.0);
    CHECK(deg.degenerate);
    CHECK(deg.distinct == 3);
}

TEST_CASE("stability map", "[equilibria]") {
    const StabilityMap m = stability_map({-10.0, 10.0, 41}, {-0.5, 1.0, 16}, -1.0, 1);
    REQUIRE(m.cells.size() == 41u * 16u);
    for (const auto& c : m.cells) {
        const auto dr = try_discriminant_roots(c.mu);
        if (dr && c.chi > dr->chi_minus && c.chi < dr->chi_plus) {
            CHECK(c.n_real_roots == 2);
            CHECK(c.s3 == -1);
            CHECK(c.s4 == -1);
        }
        CHECK(c.unphysical == (c.chi * c.mu < 0.0));
        if (std::abs(c.chi) >= 8.0 && std::abs(c.mu) <= 0.1) {
            CHECK(c.s2 == (c.chi < 0.0 ? 1 : 0));
            CHECK(c.s3 == 0);
            CHECK(c.s4 == 1);
        }
    }
    // chi-major layout
    CHECK(m.cells[1].chi == m.cells[0].chi);
    CHECK(m.cells[16].chi > m.cells[0].chi);

    const StabilityMap par = stability_map({-10.0, 10.0, 41}, {-0.5, 1.0, 16}, -1.0, 4);
    std::ostringstream a, b;
    write_stability_map_csv(a, m);
    write_stability_map_csv(b, par);
    CHECK(a.str() == b.str());
    CHECK(a.str().starts_with(
        "chi,mu,n_real_roots,s1_stable,s2_stable,s3_exists,s3_stable,s4_exists,s4_stable,sdw_stable,vortex_stable\n"));

    CHECK_THROWS_AS(stability_map({0.0, 1.0, 1}, {0.0, 1.0, 5}), DomainError);
}
