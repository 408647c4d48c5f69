// sections.hpp: energy-shell seeding and Poincare sections in the canonical charts.
#pragma once

#include "trimer/classical.hpp"
#include "trimer/equilibria.hpp"
#include "trimer/errors.hpp"
#include "trimer/model.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace trimer {

enum class Chart { Canonical, Cartesian };
enum class Coord { K1, K2, Phi1, Phi2, Q1, P1, Q2, P2 };
enum class Direction { Positive, Negative, Both };

inline const char* to_string(Chart c) { return c == Chart::Canonical ? "canonical" : "cartesian"; }

inline const char* to_string(Coord c) {
    switch (c) {
        case Coord::K1: return "K1";
        case Coord::K2: return "K2";
        case Coord::Phi1: return "phi1";
        case Coord::Phi2: return "phi2";
        case Coord::Q1: return "q1";
        case Coord::P1: return "p1";
        case Coord::Q2: return "q2";
        case Coord::P2: return "p2";
    }
    return "?";
}

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::Positive: return "positive";
        case Direction::Negative: return "negative";
        case Direction::Both: return "both";
    }
    return "?";
}

inline Chart chart_of(Coord c) {
    switch (c) {
        case Coord::K1:
        case Coord::K2:
        case Coord::Phi1:
        case Coord::Phi2: return Chart::Canonical;
        default: return Chart::Cartesian;
    }
}

inline bool is_angle(Coord c) { return c == Coord::Phi1 || c == Coord::Phi2; }

// Canonical order within a chart: (K1, K2, phi1, phi2) or (q1, p1, q2, p2).
inline std::array<Coord, 4> chart_coords(Chart c) {
    return c == Chart::Canonical ? std::array{Coord::K1, Coord::K2, Coord::Phi1, Coord::Phi2}
                                 : std::array{Coord::Q1, Coord::P1, Coord::Q2, Coord::P2};
}

inline double coord_value(const ClassicalState& s, int n, Coord c) {
    if (chart_of(c) == Chart::Canonical) {
        const CanonicalState k = to_canonical(s, n);
        switch (c) {
            case Coord::K1: return k.k1;
            case Coord::K2: return k.k2;
            case Coord::Phi1: return k.phi1;
            default: return k.phi2;
        }
    }
    const CartesianState q = to_cartesian(s, n);
    switch (c) {
        case Coord::Q1: return q.q1;
        case Coord::P1: return q.p1;
        case Coord::Q2: return q.q2;
        default: return q.p2;
    }
}

// Builds a state from four chart coordinates given in chart order.
inline ClassicalState state_from_chart(Chart chart, const std::array<double, 4>& v, int n) {
    if (chart == Chart::Canonical) return from_canonical({v[0], v[1], v[2], v[3], n});
    return from_cartesian({v[0], v[1], v[2], v[3], n});
}

inline std::size_t chart_slot(Coord c) {
    switch (c) {
        case Coord::K1:
        case Coord::Q1: return 0;
        case Coord::K2:
        case Coord::P1: return 1;
        case Coord::Phi1:
        case Coord::Q2: return 2;
        default: return 3;
    }
}

struct SectionSpec {
    Chart chart{Chart::Canonical};
    Coord condition{Coord::Phi2};
    double value{0.0};
    Direction direction{Direction::Both};
    std::array<Coord, 2> plane_axes{Coord::K1, Coord::Phi1};

    void validate() const {
        for (Coord c : {condition, plane_axes[0], plane_axes[1]})
            if (chart_of(c) != chart) throw DomainError(std::string("SectionSpec: ") + to_string(c) + " is not a coordinate of the chart");
        if (condition == plane_axes[0] || condition == plane_axes[1])
            throw DomainError("SectionSpec: the condition coordinate cannot be a plane axis");
        if (plane_axes[0] == plane_axes[1]) throw DomainError("SectionSpec: plane axes must differ");
    }

    // Signed distance to the section; angles are compared on the circle.
    double residual(const ClassicalState& s, int n) const {
        const double v = coord_value(s, n, condition) - value;
        return is_angle(condition) ? detail::wrap_angle(v) : v;
    }
};

// ---------------------------------------------------------------------------
// Energy-shell seeding
// ---------------------------------------------------------------------------

struct SeedAxis {
    Coord coord{Coord::K1};
    double lo{0.0};
    double hi{1.0};
    int n{1};

    double at(int i) const { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * double(i) / double(n - 1); }
};

// Two coordinates on a grid, one frozen, one solved for.  For the canonical chart the solve
// range of K is clipped to the chart automatically.
struct ShellSeedSpec {
    Chart chart{Chart::Canonical};
    std::pair<Coord, double> frozen{Coord::Phi2, 0.0};
    std::array<SeedAxis, 2> grid{};
    Coord solve{Coord::K2};
    double solve_lo{0.0};
    double solve_hi{1.0};
    int scan{400};
};

struct EnergyRange {
    double lo{0.0};
    double hi{0.0};
};

struct ShellSeedResult {
    std::vector<ClassicalState> seeds;
    std::size_t skipped_cells{0};
    EnergyRange sampled_range;
    bool in_range{true};
};

// Energy range per particle estimated from fixed points and a deterministic sample of the phase space.
inline EnergyRange sample_energy_range(const ModelParams& params, int samples = 20000) {
    EnergyRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto take = [&](const ClassicalState& s) {
        const double e = classical_energy(s, params);
        r.lo = std::min(r.lo, e);
        r.hi = std::max(r.hi, e);
    };
    for (const auto& fp : find_fixed_points(params)) take(fp.w);
    // the excluded chart point, all bosons in modes 1 and 2
    take(relabel_modes({cplx(-1.0), cplx(0.0)}, {2, 1, 0}));
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    for (int i = 0; i < samples; ++i) {
        const std::array<cplx, 3> a{cplx(g(rng), g(rng)), cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
        if (a[2] == cplx(0.0)) continue;
        take(from_amplitudes(a));
    }
    return r;
}

namespace detail {

inline double solve_bound_hi(const ShellSeedSpec& spec, const std::array<double, 4>& v, int n) {
    if (spec.chart == Chart::Canonical && (spec.solve == Coord::K1 || spec.solve == Coord::K2)) {
        const double other = spec.solve == Coord::K1 ? v[1] : v[0];
        return std::min(spec.solve_hi, double(n) - other);
    }
    return spec.solve_hi;
}

}  // namespace detail

// Each grid cell contributes the first root of E(x) = e_target along the solve coordinate.
inline ShellSeedResult energy_shell_seed(const ModelParams& params, double e_target, const ShellSeedSpec& spec) {
    const int n = params.n;
    ShellSeedResult out;
    out.sampled_range = sample_energy_range(params);
    const double tol = 1e-10 * params.abs_omega();
    if (e_target < out.sampled_range.lo - tol || e_target > out.sampled_range.hi + tol) {
        out.in_range = false;
        return out;
    }
    for (Coord c : {spec.frozen.first, spec.grid[0].coord, spec.grid[1].coord, spec.solve})
        if (chart_of(c) != spec.chart) throw DomainError("energy_shell_seed: coordinate outside the chosen chart");

    for (int i = 0; i < spec.grid[0].n; ++i) {
        for (int j = 0; j < spec.grid[1].n; ++j) {
            std::array<double, 4> v{};
            v[chart_slot(spec.frozen.first)] = spec.frozen.second;
            v[chart_slot(spec.grid[0].coord)] = spec.grid[0].at(i);
            v[chart_slot(spec.grid[1].coord)] = spec.grid[1].at(j);
            const std::size_t slot = chart_slot(spec.solve);
            auto energy_at = [&](double x) -> std::optional<double> {
                std::array<double, 4> u = v;
                u[slot] = x;
                try {
                    return classical_energy(state_from_chart(spec.chart, u, n), params) - e_target;
                } catch (const std::domain_error&) {
                    return std::nullopt;
                }
            };
            const double lo = spec.solve_lo, hi = detail::solve_bound_hi(spec, v, n);
            std::optional<double> root;
            if (hi > lo) {
                std::optional<double> fa = energy_at(lo);
                double xa = lo;
                for (int k = 1; k <= spec.scan && !root; ++k) {
                    const double xb = lo + (hi - lo) * double(k) / spec.scan;
                    const std::optional<double> fb = energy_at(xb);
                    if (fa && std::abs(*fa) <= tol) {
                        root = xa;
                    } else if (fa && fb && (*fa) * (*fb) < 0.0) {
                        auto f = [&](double x) { return energy_at(x).value_or(std::numeric_limits<double>::quiet_NaN()); };
                        std::uintmax_t iters = 200;
                        auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(a)); };
                        const auto br = boost::math::tools::toms748_solve(f, xa, xb, *fa, *fb, stop, iters);
                        const double fl = std::abs(f(br.first)), fr = std::abs(f(br.second));
                        const double x = fl <= fr ? br.first : br.second;
                        if (std::min(fl, fr) <= tol) root = x;
                    } else if (k == spec.scan && fb && std::abs(*fb) <= tol) {
                        root = xb;
                    }
                    xa = xb;
                    fa = fb;
                }
            }
            if (!root) {
                ++out.skipped_cells;
                continue;
            }
            v[slot] = *root;
            out.seeds.push_back(state_from_chart(spec.chart, v, n));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Poincare sections
// ---------------------------------------------------------------------------

struct SectionPoint {
    std::size_t trajectory_id{0};
    double t{0.0};
    double axis1{0.0};
    double axis2{0.0};
    double energy{0.0};
    int direction{0};  // +1 residual increasing through zero, -1 decreasing
    ClassicalState state;
};

struct TrajectoryStatus {
    double t_reached{0.0};
    bool truncated{false};  // chart overflow
    std::size_t crossings{0};
};

struct SectionResult {
    std::vector<SectionPoint> points;  // ordered by (trajectory_id, t)
    std::vector<TrajectoryStatus> trajectories;
    double shell_energy{0.0};
};

inline constexpr double kSeedShellTolerance = 1e-8;

namespace detail {

inline void trace_section(std::size_t id, const ClassicalState& seed, const ModelParams& params, const SectionSpec& spec,
                          double t_max, const IntegratorOptions& opts, std::vector<SectionPoint>& pts,
                          TrajectoryStatus& status) {
    const int n = params.n;
    ClassicalStepper stepper(seed, params, 0.0, opts);
    auto res = [&](const ClassicalState& s) { return spec.residual(s, n); };
    double ra = res(seed);
    // sub-sampling of each accepted step guards against two crossings inside one step
    constexpr int kSub = 4;
    try {
        while (stepper.time() < t_max) {
            const auto [t0, t1] = stepper.step();
            double ta = t0;
            for (int k = 1; k <= kSub; ++k) {
                const double tb = std::min(t_max, t0 + (t1 - t0) * double(k) / kSub);
                if (tb <= ta) break;
                const double rb = res(stepper.state_at(tb));
                const bool jump = is_angle(spec.condition) && std::abs(rb - ra) > std::numbers::pi;
                int dir = 0;
                if (!jump) {
                    if (ra < 0.0 && rb >= 0.0) dir = +1;
                    else if (ra > 0.0 && rb <= 0.0) dir = -1;
                }
                const bool wanted = dir != 0 && (spec.direction == Direction::Both ||
                                                 (spec.direction == Direction::Positive && dir > 0) ||
                                                 (spec.direction == Direction::Negative && dir < 0));
                if (wanted) {
                    auto f = [&](double t) { return res(stepper.state_at(t)); };
                    double tc = tb;
                    if (rb != 0.0) {
                        std::uintmax_t iters = 200;
                        auto stop = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a)); };
                        const auto br = boost::math::tools::toms748_solve(f, ta, tb, ra, rb, stop, iters);
                        tc = std::abs(f(br.first)) <= std::abs(f(br.second)) ? br.first : br.second;
                    }
                    const ClassicalState sc = stepper.state_at(tc);
                    pts.push_back({id, tc, coord_value(sc, n, spec.plane_axes[0]), coord_value(sc, n, spec.plane_axes[1]),
                                   classical_energy(sc, params), dir, sc});
                    ++status.crossings;
                }
                ta = tb;
                ra = rb;
            }
            status.t_reached = std::min(t_max, stepper.time());
        }
    } catch (const ChartOverflowError& e) {
        status.truncated = true;
        status.t_reached = e.time();
    }
}

}  // namespace detail

// Seeds must share an energy shell to 1e-8 |Omega|.  Trajectories run on `workers` threads;
// points are assembled in trajectory order regardless of the worker count.
inline SectionResult poincare_section(const std::vector<ClassicalState>& seeds, const ModelParams& params,
                                      const SectionSpec& spec, double t_max, const IntegratorOptions& opts = {},
                                      int workers = 1) {
    spec.validate();
    if (!(t_max > 0.0)) throw DomainError("poincare_section: t_max must be positive");
    SectionResult out;
    if (seeds.empty()) return out;
    out.shell_energy = classical_energy(seeds.front(), params);
    for (const auto& s : seeds)
        if (std::abs(classical_energy(s, params) - out.shell_energy) > kSeedShellTolerance * params.abs_omega())
            throw DomainError("poincare_section: seeds are not on a common energy shell (tolerance 1e-8 |Omega|)");

    std::vector<std::vector<SectionPoint>> per(seeds.size());
    out.trajectories.resize(seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < seeds.size(); k = next++)
            detail::trace_section(k, seeds[k], params, spec, t_max, opts, per[k], out.trajectories[k]);
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < std::max(1, workers); ++w) pool.emplace_back(work);
        work();
    }
    for (auto& v : per) out.points.insert(out.points.end(), v.begin(), v.end());
    return out;
}

// CSV: trajectory_id,t,axis1,axis2,energy
inline void write_section_csv(std::ostream& os, const SectionResult& r) {
    using detail::fmt_double;
    os << "trajectory_id,t,axis1,axis2,energy\n";
    for (const auto& p : r.points)
        os << p.trajectory_id << ',' << fmt_double(p.t) << ',' << fmt_double(p.axis1) << ',' << fmt_double(p.axis2) << ','
           << fmt_double(p.energy) << '\n';
}

}  // namespace trimer
