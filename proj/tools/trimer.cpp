// trimer: command-line front end.
//
//   trimer <command> [--preset ID] [--config FILE] [flags] [--set key=value ...]
//
// Precedence: built-in defaults < --config < --preset < flags < --set.
#include "trimer/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Flags {
    std::optional<double> omega, chi, mu, rel_tol, t_end, sample_dt;
    std::optional<int> n, workers;
    std::optional<std::string> preset, out, config, mode, w1, w2, fock;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--omega", f.omega, "tunneling rate Omega (nonzero)");
    app->add_option("--n", f.n, "particle number N");
    app->add_option("--chi", f.chi, "self-collision parameter chi");
    app->add_option("--mu", f.mu, "cross-collision parameter mu");
    app->add_option("--preset", f.preset, "figure preset id");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--rel-tol", f.rel_tol, "relative integration tolerance");
    app->add_option("--t-end", f.t_end, "final time in units of 1/|Omega|");
    app->add_option("--sample-dt", f.sample_dt, "sampling interval");
    app->add_option("--workers", f.workers, "worker threads");
    app->add_option("--config", f.config, "run config file (key = value lines)");
    app->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

// "re,im" or "re"
std::pair<double, double> parse_pair(const std::string& s) {
    const auto comma = s.find(',');
    const std::string re = s.substr(0, comma);
    const std::string im = comma == std::string::npos ? "0" : s.substr(comma + 1);
    return {trimer::detail::parse_double(trimer::detail::trim(re), "w"), trimer::detail::parse_double(trimer::detail::trim(im), "w")};
}

trimer::cli::RunConfig assemble(const std::string& command, const Flags& f) {
    using namespace trimer;
    cli::RunConfig c;
    c.command = command;
    if (f.config) {
        std::ifstream in(*f.config);
        if (!in) throw cli::UsageError("cannot read config file " + *f.config);
        std::stringstream ss;
        ss << in.rdbuf();
        KeyValues kv = detail::parse_kv_lines(ss.str());
        if (auto it = kv.find("command"); it != kv.end() && it->second != command)
            throw cli::UsageError("config file is for '" + it->second + "', not '" + command + "'");
        kv.erase("preset");  // the config already holds the preset's values
        cli::apply_overrides(c, kv);
        if (auto pre = detail::parse_kv_lines(ss.str()); pre.contains("preset")) c.preset = pre.at("preset");
    }
    if (f.preset) cli::apply_preset(c, *f.preset);

    KeyValues kv;
    auto put = [&](const char* key, const auto& opt) {
        if (opt) {
            std::ostringstream os;
            if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, double>)
                os << detail::fmt_double(*opt);
            else
                os << *opt;
            kv[key] = os.str();
        }
    };
    put("omega", f.omega);
    put("n", f.n);
    put("chi", f.chi);
    put("mu", f.mu);
    put("out", f.out);
    put("rel_tol", f.rel_tol);
    put("t_end", f.t_end);
    put("sample_dt", f.sample_dt);
    put("workers", f.workers);
    put("mode", f.mode);
    put("fock", f.fock);
    if (f.w1) {
        const auto [re, im] = parse_pair(*f.w1);
        kv["w1_re"] = detail::fmt_double(re);
        kv["w1_im"] = detail::fmt_double(im);
    }
    if (f.w2) {
        const auto [re, im] = parse_pair(*f.w2);
        kv["w2_re"] = detail::fmt_double(re);
        kv["w2_im"] = detail::fmt_double(im);
    }
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw cli::UsageError("--set expects key=value, got '" + s + "'");
        kv[std::string(detail::trim(s.substr(0, eq)))] = std::string(detail::trim(s.substr(eq + 1)));
    }
    cli::apply_overrides(c, kv);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-well Bose-Einstein condensate: classical and quantum dynamics"};
    app.require_subcommand(1);
    Flags flags;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"params", "convert trap geometry and rates, print derived parameters"},
        {"fixed-points", "list fixed points with linear stability"},
        {"stability-map", "fixed-point census and stability over a (chi, mu) grid"},
        {"evolve", "classical and/or quantum time evolution"},
        {"sphere-portrait", "twin-surface trajectories on the sphere"},
        {"poincare", "Poincare section on an energy shell"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, flags);
        if (name == "evolve") {
            sub->add_option("--mode", flags.mode, "classical, quantum or both");
            sub->add_option("--w1", flags.w1, "initial w1 as re,im");
            sub->add_option("--w2", flags.w2, "initial w2 as re,im");
            sub->add_option("--fock", flags.fock, "initial Fock state n1,n2,n3 (quantum)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : trimer::cli::kUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    trimer::cli::RunConfig cfg;
    try {
        cfg = assemble(command, flags);
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return trimer::cli::kUsage;
    }
    return trimer::cli::run(cfg, std::cout, std::cerr);
}
