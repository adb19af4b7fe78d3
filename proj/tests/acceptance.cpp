// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "oracles.hpp"
#include "tamsdld/tamsdld.hpp"

using namespace tamsdld;

namespace {

struct grid_point {
    process_model model;
    lag_spec lag;
    std::string label;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string label_of(const process_model& m, const lag_spec& lag) {
    std::string s = m.kind() == process_kind::bm ? "BM" : "FBM H=" + fmt(m.hurst());
    return s + " N=" + std::to_string(lag.n()) + " tau=" + std::to_string(lag.tau());
}

// N in {16, 64, 257} x tau in {1, 2, 5} x (H in {0.3, 0.5, 0.7} plus BM)
std::vector<grid_point> trace_grid() {
    std::vector<grid_point> g;
    for (std::size_t n : {16u, 64u, 257u})
        for (std::size_t tau : {1u, 2u, 5u}) {
            const lag_spec lag(n, tau);
            std::vector<process_model> models{process_model::bm(0.5)};
            for (double h : {0.3, 0.5, 0.7})
                models.push_back(process_model::fbm(h, 0.5));
            for (const auto& m : models)
                g.push_back({m, lag, label_of(m, lag)});
        }
    return g;
}

struct outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass)
        ++failures;
    std::printf("%s criterion %d: %s [%.1f s] %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
                secs, o.detail.c_str());
    std::fflush(stdout);
}

// 1. sum lambda = M sigma(0); sum lambda^2 against the closed forms
outcome trace_identities() {
    double worst_sum = 0, worst_sq = 0, worst_exact = 0;
    std::string where_sq;
    int sq_fail = 0, total = 0;
    for (const auto& p : trace_grid()) {
        const auto s = spectrum(p.model, p.lag);
        const double m = static_cast<double>(p.lag.m());
        worst_sum = std::max(worst_sum, rel(s.sum_lambda, m * increment_mean_square(p.model, p.lag.tau())));
        const double r = rel(s.sum_lambda_sq, sum_lambda_sq_closed_form(p.model, p.lag));
        if (r > worst_sq) {
            worst_sq = r;
            where_sq = p.label;
        }
        sq_fail += r > 1e-10;
        ++total;
        worst_exact = std::max(worst_exact, rel(s.sum_lambda_sq, sum_lambda_sq_trace(p.model, p.lag)));
    }
    const bool pass = worst_sum <= 1e-10 && sq_fail == 0;
    return {pass, "sum_lambda worst rel " + fmt(worst_sum) + "; sum_lambda_sq vs closed form: " +
                      std::to_string(sq_fail) + "/" + std::to_string(total) +
                      " points above 1e-10, worst rel " + fmt(worst_sq) + " (" + where_sq +
                      "); vs exact trace M s0^2 + 2 sum (M-j) s_j^2: worst rel " + fmt(worst_exact)};
}

// 2. H = 1/2 reduction
outcome half_hurst_reduction() {
    double worst = 0;
    std::string where;
    auto note = [&](double r, const std::string& w) {
        if (r > worst) {
            worst = r;
            where = w;
        }
    };
    for (std::size_t n : {16u, 64u, 257u})
        for (std::size_t tau : {1u, 2u, 5u}) {
            const lag_spec lag(n, tau);
            const auto bm = process_model::bm(0.5);
            const auto fb = process_model::fbm(0.5, 0.5);
            const auto sb = spectrum(bm, lag), sf = spectrum(fb, lag);
            for (std::size_t i = 0; i < sb.size(); ++i)
                note(rel(sf.eigenvalues[i], sb.eigenvalues[i]), "eigenvalue " + label_of(fb, lag));
            const auto qb = build_series(sb), qf = build_series(sf);
            const double mean = sb.sum_lambda / sb.size();
            for (double f : {0.2, 0.5, 0.8, 1.0, 1.3, 2.0, 4.0})
                note(rel(tamsd_cdf(qf, f * mean), tamsd_cdf(qb, f * mean)), "cdf " + label_of(fb, lag));
            for (double e : {0.05 * mean, 0.5 * mean, 2.0 * mean}) {
                note(rel(tamsd_deviation_bound(sf, lag, e).log_bound,
                         tamsd_deviation_bound(sb, lag, e).log_bound),
                     "generic bound " + label_of(fb, lag));
                note(rel(fbm_deviation_bound(fb, lag, sf.lambda_max, e).log_bound,
                         bm_deviation_bound(bm, lag, sb.lambda_max, e).log_bound),
                     "closed-form bound " + label_of(fb, lag));
            }
            if (tau >= 2)
                for (double e : {0.05, 0.2})
                    note(rel(beta_estimator_bound(fb, lag, sf.lambda_max, e).log_bound,
                             chernoff_tail({2 * sum_lambda_sq_closed_form(bm, lag), 2 * sb.lambda_max},
                                           lag.m() * std::expm1(e * std::log(double(tau))) * tau)
                                 .log_bound),
                         "exponent bound " + label_of(fb, lag));
        }
    return {worst <= 1e-10, "worst rel " + fmt(worst) + (where.empty() ? "" : " (" + where + ")")};
}

// 3. lambda_max between the row-sum lower and central-row upper values
outcome sandwich() {
    int checked = 0, bad = 0, reported = 0;
    std::string first_bad;
    for (const auto& p : trace_grid()) {
        const auto s = spectrum(p.model, p.lag);
        const auto b = max_eigenvalue_sandwich(p.model, p.lag);
        const double tol = 1e-10 * s.lambda_max;
        const bool inside = s.lambda_max >= b.lower - tol && s.lambda_max <= b.upper + tol;
        if (p.model.hurst() >= 0.5) {
            ++checked;
            if (!inside) {
                ++bad;
                if (first_bad.empty())
                    first_bad = p.label + " lambda_max " + fmt(s.lambda_max) + " not in [" +
                                fmt(b.lower) + ", " + fmt(b.upper) + "]";
            }
        } else if (!inside) {
            ++reported;
        }
    }
    std::string d = std::to_string(checked - bad) + "/" + std::to_string(checked) +
                    " asserted points inside; H < 1/2 violations reported: " + std::to_string(reported);
    if (!first_bad.empty())
        d += "; first violation: " + first_bad;
    return {bad == 0, d};
}

std::vector<spectrum_summary> distribution_spectra() {
    // M = N - tau in {1, 2, 4, 8}
    std::vector<spectrum_summary> out;
    for (std::size_t m : {1u, 2u, 4u, 8u}) {
        out.push_back(spectrum(process_model::bm(0.5), lag_spec(m + 2, 2)));
        out.push_back(spectrum(process_model::fbm(0.3, 0.5), lag_spec(m + 1, 1)));
        out.push_back(spectrum(process_model::fbm(0.7, 0.5), lag_spec(m + 3, 3)));
    }
    return out;
}

// 4. series CDF against direct sampling and characteristic-function inversion
outcome distribution_oracles() {
    double worst_ks = 0, worst_gp = 0;
    unsigned seed = 1;
    for (const auto& spec : distribution_spectra()) {
        const auto s = build_series(spec);
        const auto draws = oracle::sample_quadratic_form(spec.eigenvalues, 1'000'000, seed++);
        worst_ks = std::max(worst_ks, oracle::ks_distance(draws, [&](double q) {
                                return q > 0 ? quadratic_form_cdf(s, q) : 0.0;
                            }));
        oracle::gil_pelaez_cdf gp(spec.eigenvalues);
        const double hi = tamsd_quantile(s, 0.9999);
        const double m = static_cast<double>(spec.size());
        for (int i = 1; i <= 100; ++i) {
            const double w = hi * i / 100.0;
            worst_gp = std::max(worst_gp, std::abs(tamsd_cdf(s, w) - gp(m * w)));
        }
    }
    return {worst_ks <= 0.005 && worst_gp <= 1e-6,
            "worst KS " + fmt(worst_ks) + " (<= 0.005), worst |cdf - inversion| " + fmt(worst_gp) +
                " (<= 1e-6)"};
}

// 5. mass, density integral, complementarity
outcome normalization() {
    std::vector<spectrum_summary> specs = distribution_spectra();
    for (const auto& m : {process_model::bm(0.5), process_model::fbm(0.3, 0.5),
                          process_model::fbm(0.7, 0.5)})
        for (std::size_t tau : {1u, 4u})
            specs.push_back(spectrum(m, lag_spec(64, tau)));
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    double worst_deficit = 0, worst_int = 0, worst_comp = 0;
    for (const auto& spec : specs) {
        const auto s = build_series(spec);
        worst_deficit = std::max(worst_deficit, 1.0 - s.mass);
        auto f = [&](double x) { return x > 0 ? tamsd_pdf(s, x) : 0.0; };
        const double q = tamsd_quantile(s, 1 - 1e-9);
        const double integral =
            ts.integrate(f, 0.0, q, 1e-14) +
            es.integrate(f, q, std::numeric_limits<double>::infinity(), 1e-12);
        worst_int = std::max(worst_int, std::abs(integral - 1.0));
        for (int i = 1; i <= 200; ++i) {
            const double w = 1.5 * q * i / 200.0;
            worst_comp = std::max(worst_comp, std::abs(tamsd_cdf(s, w) + tamsd_tail(s, w) - 1.0));
        }
    }
    return {worst_deficit <= 1e-12 && worst_int <= 1e-9 && worst_comp <= 1e-12,
            std::to_string(specs.size()) + " spectra: worst 1 - C sum delta " + fmt(worst_deficit) +
                ", worst |int pdf - 1| " + fmt(worst_int) + ", worst |cdf + tail - 1| " +
                fmt(worst_comp)};
}

// 6. Monte Carlo dominance of the two-sided bound
outcome dominance() {
    const std::size_t taus[] = {1, 4};
    int points = 0, bad = 0, closed_bad = 0;
    std::string first_bad;
    for (const auto& model : {process_model::bm(0.5), process_model::fbm(0.3, 0.5),
                              process_model::fbm(0.7, 0.5)}) {
        mc_options o;
        o.trials = 100'000;
        o.master_seed = 20240601;
        const auto samples = mc_tamsd_samples(model, 64, taus, o);
        for (std::size_t i = 0; i < 2; ++i) {
            const lag_spec lag(64, taus[i]);
            const auto spec = spectrum(model, lag);
            const double center = increment_mean_square(model, taus[i]);
            // bound values from 1.99 down to 1e-4, log spaced
            for (int k = 0; k < 25; ++k) {
                const double target = 1.99 * std::pow(1e-4 / 1.99, k / 24.0);
                const double eps = tamsd_epsilon_for_bound(spec, lag, target);
                const auto b = tamsd_deviation_bound(spec, lag, eps);
                const auto mc = summarize_tail(samples[i], center, eps, tail_statistic::tamsd_two_sided);
                ++points;
                if (mc.p_hat > b.bound + 3 * mc.se) {
                    ++bad;
                    if (first_bad.empty())
                        first_bad = label_of(model, lag) + " eps " + fmt(eps) + ": p_hat " +
                                    fmt(mc.p_hat) + " > bound " + fmt(b.bound);
                }
                const auto cb = model.kind() == process_kind::bm
                                    ? bm_deviation_bound(model, lag, spec.lambda_max, eps)
                                    : fbm_deviation_bound(model, lag, spec.lambda_max, eps);
                closed_bad += mc.p_hat > cb.bound + 3 * mc.se;
            }
        }
    }
    std::string d = std::to_string(points - bad) + "/" + std::to_string(points) +
                    " points dominated by the spectrum bound; closed-form bound (informational): " +
                    std::to_string(closed_bad) + " points not dominated";
    if (!first_bad.empty())
        d += "; first violation: " + first_bad;
    return {bad == 0, d};
}

// 7. exact log-MGF below the sub-gamma envelope
outcome mgf_inequality() {
    int bad = 0, total = 0;
    double worst_ratio = -1e300;
    for (const auto& p : trace_grid()) {
        const auto spec = spectrum(p.model, p.lag);
        const auto sg = make_subgamma_params(spec);
        for (int i = 1; i <= 50; ++i) {
            const double g = (i / 51.0) / sg.c;
            const double lhs = centered_log_mgf(spec, g);
            const double rhs = subgamma_log_mgf_envelope(sg, g);
            worst_ratio = std::max(worst_ratio, lhs / rhs);
            ++total;
            bad += lhs > rhs * (1 + 4 * std::numeric_limits<double>::epsilon());
        }
    }
    return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) +
                          " (gamma, spectrum) pairs satisfy the inequality; max lhs/rhs " +
                          fmt(worst_ratio)};
}

// 8. exponent estimator
outcome beta_suite() {
    const auto model = process_model::fbm(0.7, 0.5);
    const lag_spec lag(1024, 8);
    mc_options o;
    o.trials = 10'000;
    o.master_seed = 77;
    const std::size_t taus[] = {8};
    const auto betas = beta_hat_samples(mc_tamsd_samples(model, 1024, taus, o)[0], 8);
    const double mean = mean_of(betas);
    const bool mean_ok = std::abs(mean - 1.4) <= 0.05;
    const double lmax = spectrum(model, lag).lambda_max;
    int points = 0, bad = 0;
    std::string first_bad;
    for (int k = 1; k <= 20; ++k) {
        const double eps = 0.025 * k;
        const auto b = beta_estimator_bound(model, lag, lmax, eps);
        for (double center : {1.4, mean}) {
            const auto mc = summarize_tail(betas, center, eps, tail_statistic::beta_right);
            ++points;
            if (mc.p_hat > b.bound + 3 * mc.se) {
                ++bad;
                if (first_bad.empty())
                    first_bad = "eps " + fmt(eps) + " center " + fmt(center) + ": p_hat " +
                                fmt(mc.p_hat) + " > bound " + fmt(b.bound);
            }
        }
    }
    bool rejected = false;
    try {
        beta_estimator_bound(model, lag_spec(1024, 1), 0.1);
    } catch (const domain_error&) {
        rejected = true;
    }
    std::string d = "mean beta_hat " + fmt(mean) + " (target 1.4 +- 0.05); " +
                    std::to_string(points - bad) + "/" + std::to_string(points) +
                    " tail points dominated (analytic and ensemble centering); tau = 1 " +
                    (rejected ? "rejected" : "NOT rejected");
    if (!first_bad.empty())
        d += "; first violation: " + first_bad;
    return {mean_ok && bad == 0 && rejected, d};
}

// 9. verify output independent of the worker count
outcome determinism() {
    run_config c;
    c.process = process_kind::fbm;
    c.hurst = 0.7;
    c.n = 64;
    c.taus = {1, 4};
    c.trials = 20'000;
    c.seed = 123456789;
    std::string first;
    bool same = true;
    for (unsigned threads : {1u, 4u, 8u}) {
        c.threads = threads;
        std::ostringstream os;
        write_csv(cmd_verify(c), os);
        if (first.empty())
            first = os.str();
        else
            same = same && os.str() == first;
    }
    return {same, same ? "identical CSV output at 1, 4 and 8 workers"
                       : "outputs differ between worker counts"};
}

} // namespace

int main() {
    report(1, "trace identities", trace_identities);
    report(2, "H = 1/2 reduction", half_hurst_reduction);
    report(3, "eigenvalue sandwich", sandwich);
    report(4, "distribution oracle equivalence", distribution_oracles);
    report(5, "series normalization", normalization);
    report(6, "bound dominance", dominance);
    report(7, "sub-gamma MGF inequality", mgf_inequality);
    report(8, "exponent estimator suite", beta_suite);
    report(9, "determinism", determinism);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
