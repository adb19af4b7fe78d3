#pragma once

// Batch commands behind the command-line tool. Each returns a fully built table,
// so nothing is written unless the whole computation succeeded.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tamsdld/bounds.hpp"
#include "tamsdld/error.hpp"
#include "tamsdld/gchi2.hpp"
#include "tamsdld/models.hpp"
#include "tamsdld/simulate.hpp"
#include "tamsdld/toeplitz_eigen.hpp"

namespace tamsdld {

class config_error : public error {
public:
    using error::error;
};

enum class output_format { csv, json };

/// 17 significant digits, '.' decimal point, locale independent.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

struct run_config {
    process_kind process = process_kind::bm;
    double diffusion = 0.5;
    std::optional<double> hurst;
    std::size_t n = 0;
    std::vector<std::size_t> taus;
    std::vector<double> epsilons;
    std::string eps_grid; // "lo:hi:steps", linear and inclusive
    std::vector<double> xs;  // dist: explicit TAMSD values
    std::size_t points = 50; // dist: quantile grid size when xs is empty
    std::size_t trials = 10'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    output_format format = output_format::csv;
    std::string out;
    double mass_tol = 1e-12;

    process_model model() const {
        if (process == process_kind::bm)
            return process_model::bm(diffusion);
        if (!hurst)
            throw config_error("--process fbm needs --hurst in (0, 1)");
        return process_model::fbm(*hurst, diffusion);
    }
};

/// Parses "lo:hi:steps" into steps points from lo to hi inclusive.
inline std::vector<double> parse_eps_grid(const std::string& spec) {
    const auto a = spec.find(':');
    const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
    if (b == std::string::npos || spec.find(':', b + 1) != std::string::npos)
        throw config_error("--eps-grid expects lo:hi:steps, got '" + spec + "'");
    double lo = 0, hi = 0;
    long steps = 0;
    try {
        std::size_t used = 0;
        const std::string s_lo = spec.substr(0, a), s_hi = spec.substr(a + 1, b - a - 1),
                          s_st = spec.substr(b + 1);
        lo = std::stod(s_lo, &used);
        if (used != s_lo.size())
            throw std::invalid_argument(s_lo);
        hi = std::stod(s_hi, &used);
        if (used != s_hi.size())
            throw std::invalid_argument(s_hi);
        steps = std::stol(s_st, &used);
        if (used != s_st.size())
            throw std::invalid_argument(s_st);
    } catch (const std::logic_error&) {
        throw config_error("--eps-grid expects numbers lo:hi:steps, got '" + spec + "'");
    }
    if (!(lo > 0.0) || !(hi >= lo) || steps < 1 || (steps == 1 && hi != lo))
        throw config_error("--eps-grid needs 0 < lo <= hi and steps >= 1 (steps = 1 only when "
                           "lo = hi), got '" + spec + "'");
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (long i = 0; i < steps; ++i)
        out[i] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    out.back() = hi;
    return out;
}

/// Explicit epsilons followed by the grid, in the order given.
inline std::vector<double> resolved_epsilons(const run_config& cfg) {
    std::vector<double> eps = cfg.epsilons;
    if (!cfg.eps_grid.empty()) {
        const auto g = parse_eps_grid(cfg.eps_grid);
        eps.insert(eps.end(), g.begin(), g.end());
    }
    for (double e : eps)
        if (!(e > 0.0) || !std::isfinite(e))
            throw config_error("epsilon must be a positive finite number, got " +
                               format_double(e));
    return eps;
}

/// Checks everything a command needs before any computation starts.
inline void validate(const run_config& cfg) {
    if (cfg.n < 2)
        throw config_error("-N must be given and be >= 2");
    if (cfg.taus.empty())
        throw config_error("at least one --tau is required");
    for (std::size_t tau : cfg.taus) {
        if (tau < 1 || tau >= cfg.n)
            throw config_error("--tau " + std::to_string(tau) + " must lie in [1, N-1] = [1, " +
                               std::to_string(cfg.n - 1) + "]");
    }
    try {
        (void)cfg.model();
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(e.what());
    }
    if (!(cfg.mass_tol > 0.0 && cfg.mass_tol < 1.0))
        throw config_error("--mass-tol must lie in (0, 1)");
    if (cfg.trials < 1)
        throw config_error("--trials must be >= 1");
    (void)resolved_epsilons(cfg);
}

// ---------------------------------------------------------------------------
// Tables

using cell = std::variant<double, std::int64_t, std::string, bool>;

struct table {
    std::vector<std::string> columns;
    std::vector<std::vector<cell>> rows;
    bool ok = true;                    // every check of the command passed
    std::vector<std::string> failures; // one line per failed check

    void add(std::vector<cell> row) {
        if (row.size() != columns.size())
            throw dimension_error("row width does not match the header");
        rows.push_back(std::move(row));
    }
    std::size_t column(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end())
            throw domain_error("no column named " + name);
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline std::string format_cell(const cell& c) {
    struct visitor {
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(visitor{}, c);
}

inline void write_csv(const table& t, std::ostream& os) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
}

inline nlohmann::ordered_json to_json(const table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            std::visit([&](const auto& v) { obj[t.columns[i]] = v; }, row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline void write_json(const table& t, std::ostream& os) { os << to_json(t).dump(2) << '\n'; }

inline void write_table(const table& t, output_format f, std::ostream& os) {
    if (f == output_format::csv)
        write_csv(t, os);
    else
        write_json(t, os);
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_table_file(const table& t, output_format f, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw error("cannot open " + tmp.string() + " for writing");
        write_table(t, f, os);
        os.flush();
        if (!os) {
            os.close();
            std::filesystem::remove(tmp);
            throw error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw error("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

inline std::string canonical_key(std::string k) {
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

template <class T>
T json_get(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error("config key '" + key + "' has the wrong type");
    }
}

template <class T>
std::vector<T> json_list(const nlohmann::json& v, const std::string& key) {
    if (v.is_array()) {
        std::vector<T> out;
        for (const auto& e : v)
            out.push_back(json_get<T>(e, key));
        return out;
    }
    return {json_get<T>(v, key)};
}

inline std::size_t json_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw config_error("config key '" + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

} // namespace detail

inline process_kind parse_process(const std::string& s) {
    if (s == "bm")
        return process_kind::bm;
    if (s == "fbm")
        return process_kind::fbm;
    throw config_error("process must be bm or fbm, got '" + s + "'");
}

inline output_format parse_format(const std::string& s) {
    if (s == "csv")
        return output_format::csv;
    if (s == "json")
        return output_format::json;
    throw config_error("format must be csv or json, got '" + s + "'");
}

/// Fills cfg from a JSON object, skipping keys in `locked` (already set on the command line).
/// Keys: process, diffusion, hurst, N, tau, eps, eps_grid, x, points, trials, seed,
/// threads, format, out, mass_tol ('-' and '_' are interchangeable).
inline void apply_config_json(run_config& cfg, const nlohmann::json& doc,
                              const std::set<std::string>& locked = {}) {
    if (!doc.is_object())
        throw config_error("config file must hold a JSON object");
    for (const auto& [raw, v] : doc.items()) {
        const std::string key = detail::canonical_key(raw);
        if (locked.count(key))
            continue;
        if (key == "process")
            cfg.process = parse_process(detail::json_get<std::string>(v, key));
        else if (key == "diffusion")
            cfg.diffusion = detail::json_get<double>(v, key);
        else if (key == "hurst")
            cfg.hurst = detail::json_get<double>(v, key);
        else if (key == "N")
            cfg.n = detail::json_count(v, key);
        else if (key == "tau") {
            cfg.taus.clear();
            for (const auto& e : v.is_array() ? v : nlohmann::json::array({v}))
                cfg.taus.push_back(detail::json_count(e, key));
        } else if (key == "eps")
            cfg.epsilons = detail::json_list<double>(v, key);
        else if (key == "eps_grid")
            cfg.eps_grid = detail::json_get<std::string>(v, key);
        else if (key == "x")
            cfg.xs = detail::json_list<double>(v, key);
        else if (key == "points")
            cfg.points = detail::json_count(v, key);
        else if (key == "trials")
            cfg.trials = detail::json_count(v, key);
        else if (key == "seed") {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                           v.get<std::int64_t>() < 0))
                throw config_error("config key 'seed' must be a nonnegative integer");
            cfg.seed = v.get<std::uint64_t>();
        } else if (key == "threads")
            cfg.threads = static_cast<unsigned>(detail::json_count(v, key));
        else if (key == "format")
            cfg.format = parse_format(detail::json_get<std::string>(v, key));
        else if (key == "out")
            cfg.out = detail::json_get<std::string>(v, key);
        else if (key == "mass_tol")
            cfg.mass_tol = detail::json_get<double>(v, key);
        else
            throw config_error("unknown config key '" + raw + "'");
    }
}

// ---------------------------------------------------------------------------
// Commands

/// One row per (tau, epsilon, method): the spectrum-based bound and the closed form.
inline table cmd_bound(const run_config& cfg) {
    validate(cfg);
    const auto eps = resolved_epsilons(cfg);
    if (eps.empty())
        throw config_error("bound needs --eps or --eps-grid");
    const auto model = cfg.model();
    table t;
    t.columns = {"tau", "epsilon", "bound", "log_bound", "nu", "c",
                 "lambda_max", "sum_lambda_sq", "method"};
    for (std::size_t tau : cfg.taus) {
        const lag_spec lag(cfg.n, tau);
        const auto spec = spectrum(model, lag);
        const double closed = sum_lambda_sq_closed_form(model, lag);
        for (double e : eps) {
            const auto g = tamsd_deviation_bound(spec, lag, e);
            const auto c = model.kind() == process_kind::bm
                               ? bm_deviation_bound(model, lag, spec.lambda_max, e)
                               : fbm_deviation_bound(model, lag, spec.lambda_max, e);
            const auto ti = static_cast<std::int64_t>(tau);
            t.add({ti, e, g.bound, g.log_bound, g.nu, g.c, spec.lambda_max, spec.sum_lambda_sq,
                   std::string("generic")});
            t.add({ti, e, c.bound, c.log_bound, c.nu, c.c, spec.lambda_max, closed,
                   std::string("closed_form")});
        }
    }
    return t;
}

/// PDF, CDF and tail of M_N(tau) on a value grid (--x) or a quantile grid (--points).
inline table cmd_dist(const run_config& cfg) {
    validate(cfg);
    for (double x : cfg.xs)
        if (!(x > 0.0))
            throw config_error("--x values must be positive");
    if (cfg.xs.empty() && cfg.points < 1)
        throw config_error("--points must be >= 1");
    const auto model = cfg.model();
    table t;
    t.columns = {"tau", "x", "pdf", "cdf", "tail", "mass_deficit", "K"};
    for (std::size_t tau : cfg.taus) {
        const lag_spec lag(cfg.n, tau);
        const auto series = build_series(spectrum(model, lag), series_options{cfg.mass_tol});
        std::vector<double> xs = cfg.xs;
        if (xs.empty()) {
            for (std::size_t i = 0; i < cfg.points; ++i)
                xs.push_back(tamsd_quantile(series, (i + 0.5) / static_cast<double>(cfg.points)));
        }
        double prev_x = 0.0, prev_cdf = -1.0;
        for (double x : xs) {
            const double c = tamsd_cdf(series, x);
            const double q = tamsd_tail(series, x);
            if (std::abs(c + q - 1.0) > cfg.mass_tol) {
                t.ok = false;
                t.failures.push_back("cdf + tail deviates from 1 at x = " + format_double(x));
            }
            if (x >= prev_x && c < prev_cdf) {
                t.ok = false;
                t.failures.push_back("cdf decreases at x = " + format_double(x));
            }
            prev_x = x;
            prev_cdf = c;
            t.add({static_cast<std::int64_t>(tau), x, tamsd_pdf(series, x), c, q,
                   series.mass_deficit, static_cast<std::int64_t>(series.k_max)});
        }
    }
    return t;
}

namespace detail {

// Bound levels used when verify gets no explicit epsilons.
inline std::vector<double> default_bound_targets() {
    return {1.5, 1.0, 0.5, 0.2, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
}

inline mc_options mc_from(const run_config& cfg) {
    mc_options o;
    o.trials = cfg.trials;
    o.master_seed = cfg.seed;
    o.threads = cfg.threads;
    return o;
}

} // namespace detail

/// Monte Carlo tail frequencies against the two-sided TAMSD bound.
/// A row fails when bound < 1 and p_hat - 3 SE > bound.
inline table cmd_verify(const run_config& cfg) {
    validate(cfg);
    if (cfg.trials < 1000)
        throw config_error("verify needs --trials >= 1000");
    const auto model = cfg.model();
    const auto given = resolved_epsilons(cfg);
    const auto samples = mc_tamsd_samples(model, cfg.n, cfg.taus, detail::mc_from(cfg));

    table t;
    t.columns = {"tau", "epsilon", "p_hat", "se", "ci_low", "ci_high",
                 "bound", "log_bound", "dominated", "check"};
    for (std::size_t i = 0; i < cfg.taus.size(); ++i) {
        const std::size_t tau = cfg.taus[i];
        const lag_spec lag(cfg.n, tau);
        const auto spec = spectrum(model, lag);
        std::vector<double> eps = given;
        if (eps.empty())
            for (double target : detail::default_bound_targets())
                eps.push_back(tamsd_epsilon_for_bound(spec, lag, target));
        const double center = increment_mean_square(model, tau);
        for (double e : eps) {
            const auto b = tamsd_deviation_bound(spec, lag, e);
            const auto mc =
                summarize_tail(samples[i], center, e, tail_statistic::tamsd_two_sided);
            const bool pass = !(b.bound < 1.0) || mc.p_hat - 3.0 * mc.se <= b.bound;
            if (!pass) {
                t.ok = false;
                t.failures.push_back("tau = " + std::to_string(tau) + ", epsilon = " +
                                     format_double(e) + ": p_hat " + format_double(mc.p_hat) +
                                     " exceeds bound " + format_double(b.bound) + " + 3 SE");
            }
            t.add({static_cast<std::int64_t>(tau), e, mc.p_hat, mc.se, mc.ci_low, mc.ci_high,
                   b.bound, b.log_bound, mc.ci_low <= b.bound, std::string(pass ? "pass" : "fail")});
        }
    }
    return t;
}

/// Exponent-estimator tail frequencies (analytic and ensemble centering) against the
/// one-sided bound. Needs FBM with D = 1/2 and tau >= 2.
inline table cmd_beta(const run_config& cfg) {
    validate(cfg);
    if (cfg.process != process_kind::fbm)
        throw config_error("beta needs --process fbm");
    if (cfg.diffusion != 0.5)
        throw config_error("beta needs --diffusion 0.5 (the estimator bound assumes D = 1/2)");
    for (std::size_t tau : cfg.taus)
        if (tau < 2)
            throw config_error("beta needs --tau >= 2: the estimator divides by ln tau, which is "
                               "0 at tau = 1");
    const auto model = cfg.model();
    std::vector<double> eps = resolved_epsilons(cfg);
    if (eps.empty())
        eps = {0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5};
    const auto samples = mc_tamsd_samples(model, cfg.n, cfg.taus, detail::mc_from(cfg));

    table t;
    t.columns = {"tau", "epsilon", "p_hat_analytic_center", "se_analytic",
                 "p_hat_ensemble_center", "se_ensemble", "bound", "log_bound",
                 "beta_mean", "beta_se", "check"};
    for (std::size_t i = 0; i < cfg.taus.size(); ++i) {
        const std::size_t tau = cfg.taus[i];
        const lag_spec lag(cfg.n, tau);
        const double lmax = spectrum(model, lag).lambda_max;
        const auto betas = beta_hat_samples(samples[i], tau);
        const double mean = mean_of(betas);
        double ss = 0.0;
        for (double b : betas)
            ss += (b - mean) * (b - mean);
        const double n = static_cast<double>(betas.size());
        const double beta_se = betas.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
        for (double e : eps) {
            const auto b = beta_estimator_bound(model, lag, lmax, e);
            const auto a = summarize_tail(betas, model.beta(), e, tail_statistic::beta_right);
            const auto m = summarize_tail(betas, mean, e, tail_statistic::beta_right);
            const bool pass = !(b.bound < 1.0) || (a.p_hat - 3.0 * a.se <= b.bound &&
                                                   m.p_hat - 3.0 * m.se <= b.bound);
            if (!pass) {
                t.ok = false;
                t.failures.push_back("tau = " + std::to_string(tau) + ", epsilon = " +
                                     format_double(e) + ": empirical tail exceeds bound " +
                                     format_double(b.bound) + " + 3 SE");
            }
            t.add({static_cast<std::int64_t>(tau), e, a.p_hat, a.se, m.p_hat, m.se, b.bound,
                   b.log_bound, mean, beta_se, std::string(pass ? "pass" : "fail")});
        }
    }
    return t;
}

} // namespace tamsdld
