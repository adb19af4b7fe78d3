// tamsdld: bounds, exact distribution and Monte Carlo checks for the TAMSD
// of Brownian and fractional Brownian motion.
//
// Exit status: 0 all checks passed, 1 a check failed, 2 bad arguments or
// configuration, 3 computation error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "tamsdld/commands.hpp"

namespace {

using namespace tamsdld;

struct cli_values {
    std::string process;
    double diffusion = 0.5;
    double hurst = 0.5;
    std::size_t n = 0;
    std::vector<std::size_t> taus;
    std::vector<double> eps;
    std::string eps_grid;
    std::vector<double> xs;
    std::size_t points = 50;
    std::size_t trials = 10'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string format;
    std::string out;
    std::string config;
    double mass_tol = 1e-12;
};

// Flag, config key and environment variable share one name.
std::string env_for(const std::string& flag) {
    std::string e = "TAMSDLD_";
    for (char ch : flag)
        e += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return e;
}

int run(int argc, char** argv) {
    CLI::App app{"Large-deviation bounds and exact distribution of the time-averaged MSD"};
    app.require_subcommand(1);
    app.fallthrough();

    cli_values v;
    std::map<std::string, CLI::Option*> opts;
    auto add = [&](const std::string& key, const std::string& names, auto& target,
                   const std::string& help) {
        auto* o = app.add_option(names, target, help)->envname(env_for(key));
        opts[key] = o;
        return o;
    };
    add("process", "--process", v.process, "bm or fbm")
        ->check(CLI::IsMember({"bm", "fbm"}));
    add("diffusion", "--diffusion", v.diffusion, "diffusion coefficient D > 0 (default 0.5)");
    add("hurst", "--hurst", v.hurst, "Hurst index in (0, 1), fbm only");
    add("N", "-N", v.n, "trajectory length");
    add("tau", "--tau", v.taus, "lag (repeatable)")->delimiter(',');
    add("eps", "--eps", v.eps, "deviation epsilon (repeatable)")->delimiter(',');
    add("eps_grid", "--eps-grid", v.eps_grid, "linear epsilon grid lo:hi:steps");
    add("x", "--x", v.xs, "dist: TAMSD values to tabulate (repeatable)")->delimiter(',');
    add("points", "--points", v.points, "dist: size of the quantile grid when --x is absent");
    add("trials", "--trials", v.trials, "Monte Carlo trials");
    add("seed", "--seed", v.seed, "master seed");
    add("threads", "--threads", v.threads, "worker threads, 0 = all cores");
    add("format", "--format", v.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    add("out", "--out", v.out, "output file (default stdout)");
    add("mass_tol", "--mass-tol", v.mass_tol, "series mass tolerance (default 1e-12)");
    app.add_option("--config", v.config, "JSON file with the same keys; flags take precedence")
        ->envname("TAMSDLD_CONFIG");

    auto* bound = app.add_subcommand("bound", "sub-gamma deviation bounds of the TAMSD");
    auto* dist = app.add_subcommand("dist", "exact PDF, CDF and tail of the TAMSD");
    auto* verify = app.add_subcommand("verify", "Monte Carlo check of the TAMSD bound");
    auto* beta = app.add_subcommand("beta", "Monte Carlo check of the exponent-estimator bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    run_config cfg;
    try {
        std::set<std::string> locked;
        for (const auto& [key, o] : opts)
            if (o->count() > 0)
                locked.insert(key);
        if (!v.config.empty()) {
            std::ifstream in(v.config);
            if (!in)
                throw config_error("cannot read config file " + v.config);
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw config_error("config file " + v.config + " is not valid JSON: " + e.what());
            }
            apply_config_json(cfg, doc, locked);
        }
        auto set = [&](const std::string& key) { return locked.count(key) > 0; };
        if (set("process"))
            cfg.process = parse_process(v.process);
        if (set("diffusion"))
            cfg.diffusion = v.diffusion;
        if (set("hurst"))
            cfg.hurst = v.hurst;
        if (set("N"))
            cfg.n = v.n;
        if (set("tau"))
            cfg.taus = v.taus;
        if (set("eps"))
            cfg.epsilons = v.eps;
        if (set("eps_grid"))
            cfg.eps_grid = v.eps_grid;
        if (set("x"))
            cfg.xs = v.xs;
        if (set("points"))
            cfg.points = v.points;
        if (set("trials"))
            cfg.trials = v.trials;
        if (set("seed"))
            cfg.seed = v.seed;
        if (set("threads"))
            cfg.threads = v.threads;
        if (set("format"))
            cfg.format = parse_format(v.format);
        if (set("out"))
            cfg.out = v.out;
        if (set("mass_tol"))
            cfg.mass_tol = v.mass_tol;
        validate(cfg);
    } catch (const error& e) {
        std::cerr << "tamsdld: " << e.what() << '\n';
        return 2;
    }

    table t;
    try {
        if (bound->parsed())
            t = cmd_bound(cfg);
        else if (dist->parsed())
            t = cmd_dist(cfg);
        else if (verify->parsed())
            t = cmd_verify(cfg);
        else if (beta->parsed())
            t = cmd_beta(cfg);
    } catch (const config_error& e) {
        std::cerr << "tamsdld: " << e.what() << '\n';
        return 2;
    } catch (const partial_result_error& e) {
        std::cerr << "tamsdld: " << e.what() << " after " << e.completed_trials()
                  << " trials\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "tamsdld: " << e.what() << '\n';
        return 3;
    }

    try {
        if (cfg.out.empty())
            write_table(t, cfg.format, std::cout);
        else
            write_table_file(t, cfg.format, cfg.out);
    } catch (const std::exception& e) {
        std::cerr << "tamsdld: " << e.what() << '\n';
        return 3;
    }
    for (const auto& f : t.failures)
        std::cerr << "tamsdld: check failed: " << f << '\n';
    return t.ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
