// cli.hpp: run configuration and the command implementations behind the `trimer` tool.
#pragma once

#include "trimer/classical.hpp"
#include "trimer/equilibria.hpp"
#include "trimer/errors.hpp"
#include "trimer/model.hpp"
#include "trimer/presets.hpp"
#include "trimer/quantum.hpp"
#include "trimer/sections.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef TRIMER_BUILD_ID
#define TRIMER_BUILD_ID "unknown"
#endif

namespace trimer::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNonConvergence = 3, kChartOverflow = 4 };

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Every option of every command.  Serialized as "key = value" lines.
struct RunConfig {
    std::string command;
    std::string preset;
    ModelParams params{-1.0, 30, 0.0, 0.0};
    std::optional<TrapGeometry> trap;
    std::string out_dir = ".";

    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double t_end = 50.0;
    double sample_dt = 0.05;
    int workers = 1;

    // evolve
    std::string mode = "classical";
    cplx w1{0.0}, w2{0.0};
    std::optional<Occupation> fock;
    int quantum_cap = 200;
    double quantum_rel_tol = 1e-12;
    double quantum_abs_tol = 1e-12;

    // stability-map
    GridAxis chi_axis{-10.0, 10.0, 101};
    GridAxis mu_axis{-1.0, 1.0, 101};

    // sphere-portrait
    int orbits = 12;

    // poincare
    std::string shell = "sdw";  // sdw, vortex, or a number (energy per particle)
    SectionSpec section;
    ShellSeedSpec seed;
};

namespace detail {

using trimer::detail::fmt_double;
using trimer::detail::parse_double;

inline Coord parse_coord(const std::string& s) {
    for (Coord c : {Coord::K1, Coord::K2, Coord::Phi1, Coord::Phi2, Coord::Q1, Coord::P1, Coord::Q2, Coord::P2})
        if (s == to_string(c)) return c;
    throw UsageError("unknown coordinate '" + s + "' (expected K1, K2, phi1, phi2, q1, p1, q2, p2)");
}

inline Chart parse_chart(const std::string& s) {
    if (s == "canonical") return Chart::Canonical;
    if (s == "cartesian") return Chart::Cartesian;
    throw UsageError("unknown chart '" + s + "' (expected canonical or cartesian)");
}

inline Direction parse_direction(const std::string& s) {
    if (s == "positive") return Direction::Positive;
    if (s == "negative") return Direction::Negative;
    if (s == "both") return Direction::Both;
    throw UsageError("unknown direction '" + s + "' (expected positive, negative or both)");
}

inline int parse_int(const std::string& s, std::string_view key) {
    const double v = parse_double(s, key);
    if (v != std::floor(v)) throw UsageError("config: '" + std::string(key) + "' must be an integer");
    return static_cast<int>(v);
}

inline Occupation parse_fock(const std::string& s) {
    Occupation o{};
    std::stringstream ss(s);
    std::string part;
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw UsageError("fock: expected n1,n2,n3");
        o[static_cast<std::size_t>(i++)] = parse_int(std::string(trimer::detail::trim(part)), "fock");
    }
    if (i != 3) throw UsageError("fock: expected n1,n2,n3");
    return o;
}

}  // namespace detail

// Applies "key = value" overrides.  Unknown keys are rejected.
inline void apply_overrides(RunConfig& c, const KeyValues& kv) {
    using namespace detail;
    for (const auto& [key, value] : kv) {
        auto num = [&] { return parse_double(value, key); };
        auto integer = [&] { return parse_int(value, key); };
        if (key == "command") c.command = value;
        else if (key == "preset") c.preset = value;
        else if (key == "omega") c.params.omega = num();
        else if (key == "n") c.params.n = integer();
        else if (key == "chi") c.params.chi = num();
        else if (key == "mu") c.params.mu = num();
        else if (key.starts_with("trap.")) {
            if (!c.trap) c.trap = TrapGeometry{};
            if (key == "trap.q0") c.trap->q0 = num();
            else if (key == "trap.d") c.trap->d = num();
            else if (key == "trap.v0") c.trap->v0 = num();
            else if (key == "trap.omega") c.trap->omega_trap = num();
            else if (key == "trap.mass") c.trap->mass = num();
            else if (key == "trap.a") c.trap->scattering_length = num();
            else throw UsageError("config: unknown key '" + key + "'");
        }
        else if (key == "out") c.out_dir = value;
        else if (key == "rel_tol") c.rel_tol = num();
        else if (key == "abs_tol") c.abs_tol = num();
        else if (key == "t_end") c.t_end = num();
        else if (key == "sample_dt") c.sample_dt = num();
        else if (key == "workers") c.workers = integer();
        else if (key == "mode") c.mode = value;
        else if (key == "w1_re") c.w1.real(num());
        else if (key == "w1_im") c.w1.imag(num());
        else if (key == "w2_re") c.w2.real(num());
        else if (key == "w2_im") c.w2.imag(num());
        else if (key == "fock") c.fock = value.empty() ? std::nullopt : std::optional(parse_fock(value));
        else if (key == "quantum_cap") c.quantum_cap = integer();
        else if (key == "quantum_rel_tol") c.quantum_rel_tol = num();
        else if (key == "quantum_abs_tol") c.quantum_abs_tol = num();
        else if (key == "chi_min") c.chi_axis.lo = num();
        else if (key == "chi_max") c.chi_axis.hi = num();
        else if (key == "chi_steps") c.chi_axis.n = integer();
        else if (key == "mu_min") c.mu_axis.lo = num();
        else if (key == "mu_max") c.mu_axis.hi = num();
        else if (key == "mu_steps") c.mu_axis.n = integer();
        else if (key == "orbits") c.orbits = integer();
        else if (key == "shell") c.shell = value;
        else if (key == "section.chart") c.section.chart = parse_chart(value);
        else if (key == "section.condition") c.section.condition = parse_coord(value);
        else if (key == "section.value") c.section.value = num();
        else if (key == "section.direction") c.section.direction = parse_direction(value);
        else if (key == "section.axis1") c.section.plane_axes[0] = parse_coord(value);
        else if (key == "section.axis2") c.section.plane_axes[1] = parse_coord(value);
        else if (key == "seed.frozen") c.seed.frozen.first = parse_coord(value);
        else if (key == "seed.frozen_value") c.seed.frozen.second = num();
        else if (key == "seed.grid1") c.seed.grid[0].coord = parse_coord(value);
        else if (key == "seed.grid1_lo") c.seed.grid[0].lo = num();
        else if (key == "seed.grid1_hi") c.seed.grid[0].hi = num();
        else if (key == "seed.grid1_n") c.seed.grid[0].n = integer();
        else if (key == "seed.grid2") c.seed.grid[1].coord = parse_coord(value);
        else if (key == "seed.grid2_lo") c.seed.grid[1].lo = num();
        else if (key == "seed.grid2_hi") c.seed.grid[1].hi = num();
        else if (key == "seed.grid2_n") c.seed.grid[1].n = integer();
        else if (key == "seed.solve") c.seed.solve = parse_coord(value);
        else if (key == "seed.solve_lo") c.seed.solve_lo = num();
        else if (key == "seed.solve_hi") c.seed.solve_hi = num();
        else if (key == "seed.scan") c.seed.scan = integer();
        else throw UsageError("config: unknown key '" + key + "'");
    }
    c.seed.chart = c.section.chart;
}

inline void apply_preset(RunConfig& c, std::string_view id) {
    const Preset* p = find_preset(id);
    if (!p) {
        std::string known;
        for (const auto& q : kPresets) known += (known.empty() ? "" : ", ") + std::string(q.id);
        throw UsageError("unknown preset '" + std::string(id) + "' (known: " + known + ")");
    }
    if (!c.command.empty() && c.command != p->command)
        throw UsageError("preset '" + std::string(id) + "' belongs to the '" + std::string(p->command) + "' command");
    c.command = p->command;
    c.preset = p->id;
    apply_overrides(c, trimer::detail::parse_kv_lines(p->overrides));
}

// Effective configuration; feeding it back through apply_overrides reproduces the run.
inline std::string serialize(const RunConfig& c) {
    using detail::fmt_double;
    std::ostringstream os;
    auto line = [&](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
    line("command", c.command);
    if (!c.preset.empty()) line("preset", c.preset);
    os << to_kv(c.params, c.trap);
    line("out", c.out_dir);
    line("rel_tol", fmt_double(c.rel_tol));
    line("abs_tol", fmt_double(c.abs_tol));
    line("t_end", fmt_double(c.t_end));
    line("sample_dt", fmt_double(c.sample_dt));
    line("workers", std::to_string(c.workers));
    if (c.command == "evolve") {
        line("mode", c.mode);
        line("w1_re", fmt_double(c.w1.real()));
        line("w1_im", fmt_double(c.w1.imag()));
        line("w2_re", fmt_double(c.w2.real()));
        line("w2_im", fmt_double(c.w2.imag()));
        if (c.fock) line("fock", std::to_string((*c.fock)[0]) + "," + std::to_string((*c.fock)[1]) + "," + std::to_string((*c.fock)[2]));
        line("quantum_cap", std::to_string(c.quantum_cap));
        line("quantum_rel_tol", fmt_double(c.quantum_rel_tol));
        line("quantum_abs_tol", fmt_double(c.quantum_abs_tol));
    } else if (c.command == "stability-map") {
        line("chi_min", fmt_double(c.chi_axis.lo));
        line("chi_max", fmt_double(c.chi_axis.hi));
        line("chi_steps", std::to_string(c.chi_axis.n));
        line("mu_min", fmt_double(c.mu_axis.lo));
        line("mu_max", fmt_double(c.mu_axis.hi));
        line("mu_steps", std::to_string(c.mu_axis.n));
    } else if (c.command == "sphere-portrait") {
        line("orbits", std::to_string(c.orbits));
    } else if (c.command == "poincare") {
        line("shell", c.shell);
        line("section.chart", to_string(c.section.chart));
        line("section.condition", to_string(c.section.condition));
        line("section.value", fmt_double(c.section.value));
        line("section.direction", to_string(c.section.direction));
        line("section.axis1", to_string(c.section.plane_axes[0]));
        line("section.axis2", to_string(c.section.plane_axes[1]));
        line("seed.frozen", to_string(c.seed.frozen.first));
        line("seed.frozen_value", fmt_double(c.seed.frozen.second));
        for (int g = 0; g < 2; ++g) {
            const std::string k = "seed.grid" + std::to_string(g + 1);
            const SeedAxis& a = c.seed.grid[static_cast<std::size_t>(g)];
            line(k, to_string(a.coord));
            line(k + "_lo", fmt_double(a.lo));
            line(k + "_hi", fmt_double(a.hi));
            line(k + "_n", std::to_string(a.n));
        }
        line("seed.solve", to_string(c.seed.solve));
        line("seed.solve_lo", fmt_double(c.seed.solve_lo));
        line("seed.solve_hi", fmt_double(c.seed.solve_hi));
        line("seed.scan", std::to_string(c.seed.scan));
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path prepare_out(const RunConfig& c) {
    std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Writes run.cfg (effective config) and meta.json (provenance + run statistics).
inline void write_provenance(const RunConfig& c, const std::filesystem::path& dir, nlohmann::json extra) {
    auto cfg = open_out(dir / "run.cfg");
    cfg << serialize(c);
    nlohmann::json meta;
    meta["command"] = c.command;
    meta["preset"] = c.preset;
    meta["build"] = TRIMER_BUILD_ID;
    meta["timestamp_utc"] = utc_timestamp();
    meta["params"] = {{"omega", c.params.omega}, {"n", c.params.n}, {"chi", c.params.chi}, {"mu", c.params.mu},
                      {"omega_eff", c.params.omega_eff()}, {"kappa", c.params.kappa()}, {"lambda", c.params.lambda()},
                      {"collisions_ignored", c.params.collisions_ignored()}, {"unphysical_signs", c.params.unphysical_signs()}};
    meta["tolerances"] = {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}, {"sample_dt", c.sample_dt}, {"t_end", c.t_end}};
    meta["run"] = std::move(extra);
    auto f = open_out(dir / "meta.json");
    f << meta.dump(2) << '\n';
}

inline std::string join_cplx(const std::vector<cplx>& v) {
    std::string s;
    for (const auto& z : v) {
        if (!s.empty()) s += ';';
        s += fmt_double(z.real()) + (z.imag() < 0 ? "" : "+") + fmt_double(z.imag()) + "i";
    }
    return s;
}

inline std::vector<cplx> squared(const std::vector<cplx>& v) {
    std::vector<cplx> out;
    for (const auto& z : v) out.push_back(z * z);
    return out;
}

// Classical counterparts of the quantum time-series columns.
inline ExpectationSet classical_series_row(double t, const ClassicalState& s, const ModelParams& p) {
    ExpectationSet e;
    e.time = t;
    e.populations = classical_populations(s, p.n);
    e.generators = classical_generators(s, p.n);
    e.js = p.n * classical_js(s);
    e.iz = classical_iz(s);
    e.b3 = p.n * 0.5 * std::norm(s.w1 - s.w2) / (1.0 + s.norm2());
    e.purity = 1.0;
    e.energy = p.n * classical_energy(s, p);
    return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_params(const RunConfig& c, std::ostream& out) {
    c.params.check();
    const auto dir = detail::prepare_out(c);
    nlohmann::json extra;
    out << "omega     " << detail::fmt_double(c.params.omega) << '\n'
        << "n         " << c.params.n << '\n'
        << "chi       " << detail::fmt_double(c.params.chi) << '\n'
        << "mu        " << detail::fmt_double(c.params.mu) << '\n'
        << "omega_eff " << detail::fmt_double(c.params.omega_eff()) << '\n'
        << "kappa     " << detail::fmt_double(c.params.kappa()) << '\n'
        << "lambda    " << detail::fmt_double(c.params.lambda()) << '\n';
    if (c.params.collisions_ignored()) out << "note      n = 1: chi and mu are ignored\n";
    if (c.params.unphysical_signs()) out << "note      chi and mu have opposite signs (not reachable by a physical trap)\n";
    if (c.trap) {
        for (const auto& w : c.trap->validate()) out << "warning   " << w << '\n';
        const CollisionRates r = derive_collision_rates(*c.trap);
        const RatesConversion conv = params_from_rates(c.params.omega, r.kappa, r.lambda, c.params.n);
        out << "trap.epsilon " << detail::fmt_double(r.epsilon) << '\n'
            << "trap.kappa   " << detail::fmt_double(r.kappa) << '\n'
            << "trap.lambda  " << detail::fmt_double(r.lambda) << '\n'
            << "trap.chi     " << detail::fmt_double(conv.params.chi) << '\n'
            << "trap.mu      " << detail::fmt_double(conv.params.mu) << '\n';
        extra["trap"] = {{"epsilon", r.epsilon}, {"kappa", r.kappa}, {"lambda", r.lambda}, {"chi", conv.params.chi},
                         {"mu", conv.params.mu}, {"collisions_ignored", conv.collisions_ignored}};
    }
    detail::write_provenance(c, dir, extra);
    return kOk;
}

inline int cmd_fixed_points(const RunConfig& c, std::ostream& out) {
    c.params.check();
    const auto dir = detail::prepare_out(c);
    const auto recs = find_fixed_points(c.params);
    auto f = detail::open_out(dir / "fixed_points.csv");
    f << "class,re_w1,im_w1,re_w2,im_w2,K1,K2,phi1,phi2,js,energy,lambda2_closed,lambda2_numeric,stability,residual\n";
    for (const auto& r : recs) {
        const CanonicalState k = to_canonical(r.w, c.params.n);
        f << to_string(r.cls) << ',' << detail::fmt_double(r.w.w1.real()) << ',' << detail::fmt_double(r.w.w1.imag()) << ','
          << detail::fmt_double(r.w.w2.real()) << ',' << detail::fmt_double(r.w.w2.imag()) << ',' << detail::fmt_double(k.k1)
          << ',' << detail::fmt_double(k.k2) << ',' << detail::fmt_double(k.phi1) << ',' << detail::fmt_double(k.phi2) << ','
          << detail::fmt_double(classical_js(r.w)) << ',' << detail::fmt_double(classical_energy(r.w, c.params)) << ','
          << detail::join_cplx(r.lambda_squared) << ',' << detail::join_cplx(detail::squared(r.jacobian_eigenvalues)) << ','
          << to_string(r.verdict) << ',' << detail::fmt_double(r.residual) << '\n';
        out << std::left << std::setw(8) << to_string(r.cls) << " w1=" << std::setw(26)
            << (detail::fmt_double(r.w.w1.real()) + (r.w.w1.imag() < 0 ? "" : "+") + detail::fmt_double(r.w.w1.imag()) + "i")
            << " K=(" << std::setprecision(6) << k.k1 << ", " << k.k2 << ", " << k.k3() << ")  " << to_string(r.verdict);
        if (!r.lambda_squared.empty()) out << "  lambda^2=" << detail::join_cplx(r.lambda_squared);
        out << '\n';
    }
    detail::write_provenance(c, dir, {{"records", recs.size()}});
    return kOk;
}

inline int cmd_stability_map(const RunConfig& c, std::ostream& out) {
    if (c.chi_axis.n < 2 || c.mu_axis.n < 2) throw UsageError("stability-map: need at least 2 grid points per axis");
    if (!(c.chi_axis.hi > c.chi_axis.lo) || !(c.mu_axis.hi > c.mu_axis.lo))
        throw UsageError("stability-map: degenerate grid (max must exceed min)");
    const auto dir = detail::prepare_out(c);
    const StabilityMap m = stability_map(c.chi_axis, c.mu_axis, c.params.omega, c.workers);
    auto f = detail::open_out(dir / "stability_map.csv");
    write_stability_map_csv(f, m);
    std::size_t unphysical = 0, degenerate = 0;
    for (const auto& cell : m.cells) {
        unphysical += cell.unphysical;
        degenerate += cell.degenerate;
    }
    out << "cells " << m.cells.size() << " (unphysical chi*mu<0: " << unphysical << ", degenerate: " << degenerate << ")\n";
    detail::write_provenance(c, dir,
                             {{"cells", m.cells.size()}, {"unphysical_cells", unphysical}, {"degenerate_cells", degenerate},
                              {"legend", {{"verdict", "1 stable, 0 unstable, 2 marginal, -1 absent"},
                                          {"n_real_roots", "distinct real roots of the twin quartic"},
                                          {"row_order", "chi-major"}}}});
    return kOk;
}

inline int cmd_evolve(const RunConfig& c, std::ostream& out) {
    c.params.check();
    const bool want_classical = c.mode == "classical" || c.mode == "both";
    const bool want_quantum = c.mode == "quantum" || c.mode == "both";
    if (!want_classical && !want_quantum) throw UsageError("evolve: --mode must be classical, quantum or both");
    if (c.fock && want_classical) {
        const auto& o = *c.fock;
        if (o[0] != 0 || o[1] != 0 || o[2] != c.params.n)
            throw UsageError("evolve: a Fock start is a coherent state only for (0,0,N); use --mode quantum");
    }
    if (want_quantum && c.params.n > c.quantum_cap) {
        std::ostringstream msg;
        msg << "evolve: quantum mode refuses N = " << c.params.n << " above the cap " << c.quantum_cap << " (dimension "
            << FockBasis::dimension(c.params.n) << "); raise --quantum-cap if that is intended";
        throw UsageError(msg.str());
    }
    const auto dir = detail::prepare_out(c);
    nlohmann::json extra;
    int code = kOk;
    if (want_classical) {
        IntegratorOptions opts;
        opts.rel_tol = c.rel_tol;
        opts.abs_tol = c.abs_tol;
        opts.sample_dt = c.sample_dt;
        const Trajectory tr = integrate({c.w1, c.w2}, c.params, c.t_end, opts);
        auto f = detail::open_out(dir / "classical.csv");
        write_trajectory_csv(f, tr, c.params.n);
        auto g = detail::open_out(dir / "classical_series.csv");
        write_quantum_header(g);
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            write_quantum_row(g, detail::classical_series_row(tr.times[i], tr.states[i], c.params));
        extra["classical"] = {{"samples", tr.times.size()}, {"max_energy_drift", tr.max_energy_drift}, {"converged", tr.converged}};
        out << "classical: " << tr.times.size() << " samples, energy drift " << tr.max_energy_drift
            << (tr.converged ? "" : " (NOT CONVERGED)") << '\n';
        if (!tr.converged) code = kNonConvergence;
    }
    if (want_quantum) {
        const QuantumOperators ops = QuantumOperators::build(c.params);
        const QuantumState psi0 = c.fock ? fock_state(c.params.n, *c.fock) : coherent_state(c.params.n, c.w1, c.w2);
        PropagationOptions popts;
        popts.rel_tol = c.quantum_rel_tol;
        popts.abs_tol = c.quantum_abs_tol;
        popts.sample_dt = c.sample_dt;
        auto f = detail::open_out(dir / "quantum.csv");
        write_quantum_header(f);
        const PropagationReport rep = propagate(psi0, ops.h, c.t_end, popts,
                                                [&](double t, const QuantumState& s) { write_quantum_row(f, expectations(s, ops, t)); },
                                                c.params.abs_omega() * c.params.n);
        extra["quantum"] = {{"samples", rep.samples}, {"max_norm_drift", rep.max_norm_drift},
                            {"max_energy_drift", rep.max_energy_drift}, {"converged", rep.converged}};
        out << "quantum: " << rep.samples << " samples, energy drift " << rep.max_energy_drift
            << (rep.converged ? "" : " (NOT CONVERGED)") << '\n';
        if (!rep.converged) code = kNonConvergence;
    }
    detail::write_provenance(c, dir, extra);
    return code;
}

inline int cmd_sphere_portrait(const RunConfig& c, std::ostream& out, const std::vector<ClassicalState>& custom_seeds = {}) {
    c.params.check();
    if (c.orbits < 1 && custom_seeds.empty()) throw UsageError("sphere-portrait: need at least one orbit");
    std::vector<ClassicalState> seeds = custom_seeds;
    if (seeds.empty()) {
        // meridians phi = 0 and phi = pi, theta evenly inside (0, pi)
        for (int k = 0; k < c.orbits; ++k) {
            const double theta = std::numbers::pi * (k + 0.5) / c.orbits;
            const double r = std::tan(0.5 * theta) / std::sqrt(2.0);
            const cplx w = (k % 2 == 0) ? cplx(r) : cplx(-r);
            seeds.push_back({w, w});
        }
        // one orbit next to each twin fixed point, so small islands are not missed
        for (const auto& r : find_fixed_points(c.params)) {
            if (r.cls != FixedPointClass::S1 && r.cls != FixedPointClass::S2 && r.cls != FixedPointClass::S3 &&
                r.cls != FixedPointClass::S4)
                continue;
            const SpherePoint sp = sphere_coords(r.w);
            const double theta = std::min(sp.theta + 0.05, std::numbers::pi - 1e-3);
            const cplx w = std::polar(std::tan(0.5 * theta) / std::sqrt(2.0), -sp.phi);
            seeds.push_back({w, w});
        }
    }
    for (const auto& s : seeds)
        if (std::abs(s.w1 - s.w2) > kTwinTolerance)
            throw UsageError("sphere-portrait: seed is off the twin surface (|w1 - w2| > 1e-9)");
    const auto dir = detail::prepare_out(c);
    IntegratorOptions opts;
    opts.rel_tol = c.rel_tol;
    opts.abs_tol = c.abs_tol;
    opts.sample_dt = c.sample_dt;

    struct Run {
        std::optional<Trajectory> tr;
        double overflow_t{-1.0};
    };
    std::vector<Run> runs(seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < seeds.size(); k = next++) {
            try {
                runs[k].tr = integrate(seeds[k], c.params, c.t_end, opts);
            } catch (const ChartOverflowError& e) {
                runs[k].overflow_t = e.time();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < std::max(1, c.workers); ++w) pool.emplace_back(work);
        work();
    }
    auto f = detail::open_out(dir / "sphere.csv");
    f << "trajectory_id,t,theta,phi,ix,iy,iz\n";
    std::size_t overflowed = 0, non_converged = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        if (!runs[k].tr) {
            ++overflowed;
            continue;
        }
        const Trajectory& tr = *runs[k].tr;
        non_converged += !tr.converged;
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            // integration noise may separate w1, w2 slightly; project onto the surface
            const cplx w = 0.5 * (tr.states[i].w1 + tr.states[i].w2);
            const SpherePoint sp = sphere_coords({w, w});
            f << k << ',' << detail::fmt_double(tr.times[i]) << ',' << detail::fmt_double(sp.theta) << ','
              << detail::fmt_double(sp.phi) << ',' << detail::fmt_double(sp.i[0]) << ',' << detail::fmt_double(sp.i[1]) << ','
              << detail::fmt_double(sp.i[2]) << '\n';
        }
    }
    auto m = detail::open_out(dir / "markers.csv");
    m << "class,theta,phi,ix,iy,iz,stability\n";
    for (const auto& r : find_fixed_points(c.params)) {
        if (r.cls != FixedPointClass::S1 && r.cls != FixedPointClass::S2 && r.cls != FixedPointClass::S3 &&
            r.cls != FixedPointClass::S4)
            continue;
        const SpherePoint sp = sphere_coords(r.w);
        m << to_string(r.cls) << ',' << detail::fmt_double(sp.theta) << ',' << detail::fmt_double(sp.phi) << ','
          << detail::fmt_double(sp.i[0]) << ',' << detail::fmt_double(sp.i[1]) << ',' << detail::fmt_double(sp.i[2]) << ','
          << to_string(r.verdict) << '\n';
    }
    out << "orbits: " << seeds.size() << " (chart overflow: " << overflowed << ", non-converged: " << non_converged << ")\n";
    detail::write_provenance(c, dir, {{"orbits", seeds.size()}, {"chart_overflow", overflowed}, {"non_converged", non_converged}});
    return non_converged ? kNonConvergence : kOk;
}

// Shell energy named by the config: the depleted-well state, the vortex, or an explicit value.
inline double resolve_shell(const RunConfig& c) {
    if (c.shell == "sdw") return classical_energy({cplx(-1.0), cplx(0.0)}, c.params);
    if (c.shell == "vortex") return classical_energy(vortex_point(true), c.params);
    return detail::parse_double(c.shell, "shell");
}

inline int cmd_poincare(const RunConfig& c, std::ostream& out) {
    c.params.check();
    RunConfig cfg = c;
    cfg.seed.chart = cfg.section.chart;
    try {
        cfg.section.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const auto dir = detail::prepare_out(cfg);
    const double e_shell = resolve_shell(cfg);
    const ShellSeedResult seeds = energy_shell_seed(cfg.params, e_shell, cfg.seed);
    nlohmann::json extra{{"shell_energy", e_shell},
                         {"seeds", seeds.seeds.size()},
                         {"skipped_cells", seeds.skipped_cells},
                         {"sampled_energy_range", {seeds.sampled_range.lo, seeds.sampled_range.hi}},
                         {"in_range", seeds.in_range},
                         {"section", {{"chart", to_string(cfg.section.chart)},
                                      {"condition", to_string(cfg.section.condition)},
                                      {"value", cfg.section.value},
                                      {"direction", to_string(cfg.section.direction)},
                                      {"axis1", to_string(cfg.section.plane_axes[0])},
                                      {"axis2", to_string(cfg.section.plane_axes[1])}}}};
    IntegratorOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.sample_dt = cfg.sample_dt;
    const SectionResult res = poincare_section(seeds.seeds, cfg.params, cfg.section, cfg.t_end, opts, cfg.workers);
    auto f = detail::open_out(dir / "section.csv");
    write_section_csv(f, res);
    auto s = detail::open_out(dir / "seeds.csv");
    s << "trajectory_id,re_w1,im_w1,re_w2,im_w2,axis1,axis2,truncated,t_reached\n";
    std::size_t truncated = 0;
    for (std::size_t k = 0; k < seeds.seeds.size(); ++k) {
        const ClassicalState& w = seeds.seeds[k];
        truncated += res.trajectories[k].truncated;
        s << k << ',' << detail::fmt_double(w.w1.real()) << ',' << detail::fmt_double(w.w1.imag()) << ','
          << detail::fmt_double(w.w2.real()) << ',' << detail::fmt_double(w.w2.imag()) << ','
          << detail::fmt_double(coord_value(w, cfg.params.n, cfg.section.plane_axes[0])) << ','
          << detail::fmt_double(coord_value(w, cfg.params.n, cfg.section.plane_axes[1])) << ','
          << (res.trajectories[k].truncated ? 1 : 0) << ',' << detail::fmt_double(res.trajectories[k].t_reached) << '\n';
    }
    // fixed points lying on the section
    auto m = detail::open_out(dir / "markers.csv");
    m << "class,axis1,axis2,stability\n";
    for (const auto& r : find_fixed_points(cfg.params)) {
        if (std::abs(cfg.section.residual(r.w, cfg.params.n)) > 1e-9) continue;
        if (std::abs(classical_energy(r.w, cfg.params) - e_shell) > 1e-9 * cfg.params.abs_omega()) continue;
        m << to_string(r.cls) << ',' << detail::fmt_double(coord_value(r.w, cfg.params.n, cfg.section.plane_axes[0])) << ','
          << detail::fmt_double(coord_value(r.w, cfg.params.n, cfg.section.plane_axes[1])) << ',' << to_string(r.verdict) << '\n';
    }
    extra["points"] = res.points.size();
    extra["truncated_trajectories"] = truncated;
    out << "seeds " << seeds.seeds.size() << " (skipped cells " << seeds.skipped_cells << "), crossings " << res.points.size()
        << ", truncated " << truncated << '\n';
    if (!seeds.in_range)
        out << "shell energy " << e_shell << " outside sampled range [" << seeds.sampled_range.lo << ", "
            << seeds.sampled_range.hi << "]\n";
    detail::write_provenance(cfg, dir, extra);
    return kOk;
}

// Dispatch with the documented exit codes.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        if (c.command == "params") return cmd_params(c, out);
        if (c.command == "fixed-points") return cmd_fixed_points(c, out);
        if (c.command == "stability-map") return cmd_stability_map(c, out);
        if (c.command == "evolve") return cmd_evolve(c, out);
        if (c.command == "sphere-portrait") return cmd_sphere_portrait(c, out);
        if (c.command == "poincare") return cmd_poincare(c, out);
        err << "unknown command '" << c.command << "'\n";
        return kUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ChartOverflowError& e) {
        err << "chart overflow: " << e.what() << '\n';
        return kChartOverflow;
    } catch (const NonConvergenceError& e) {
        err << "non-convergence: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::domain_error& e) {
        err << "invalid input: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace trimer::cli
