#pragma once

// Sub-gamma (Bernstein-type) large-deviation upper bounds for the TAMSD and
// for the log-log estimator of the anomalous diffusion exponent.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "tamsdld/error.hpp"
#include "tamsdld/models.hpp"
#include "tamsdld/toeplitz_eigen.hpp"

namespace tamsdld {

/// H(u) = 1 + u - sqrt(1 + 2u), evaluated as u^2 / (1 + u + sqrt(1 + 2u)).
inline double h_function(double u) {
    if (!(u >= 0.0))
        throw domain_error("H(u) requires u >= 0, got " + std::to_string(u));
    if (std::isinf(u))
        return u;
    return u * u / (1.0 + u + std::sqrt(1.0 + 2.0 * u));
}

/// Inverse of H on [0, inf): H(u) = v  <=>  u = v + sqrt(2v).
inline double h_inverse(double v) {
    if (!(v >= 0.0))
        throw domain_error("H^{-1}(v) requires v >= 0");
    return v + std::sqrt(2.0 * v);
}

/// log E exp(gamma X) <= gamma^2 nu / (2 (1 - c gamma)) for gamma in (0, 1/c).
struct subgamma_params {
    double nu = 0.0; // variance factor
    double c = 0.0;  // scale factor
};

enum class tail_side { two_sided, right_tail };

inline const char* to_string(tail_side s) {
    return s == tail_side::two_sided ? "two_sided" : "right_tail";
}

struct bound_result {
    double epsilon = 0.0;
    double bound = 0.0;     // exp(log_bound); may underflow to 0
    double log_bound = 0.0; // authoritative
    double nu = 0.0;
    double c = 0.0;
    tail_side sided = tail_side::right_tail;
};

/// Parameters of the centered quadratic form sum_j lambda_j (U_j - 1):
/// nu = 2 sum lambda_j^2, c = 2 max lambda_j.
inline subgamma_params make_subgamma_params(const spectrum_summary& spec) {
    if (spec.size() == 0 || !(spec.lambda_min > 0.0))
        throw domain_error("sub-gamma parameters need a positive spectrum");
    return {2.0 * spec.sum_lambda_sq, spec.lambda_bar};
}

/// P(X > epsilon) <= exp(-(nu / c^2) H(c epsilon / nu)).
inline bound_result chernoff_tail(const subgamma_params& p, double epsilon) {
    if (!(p.nu > 0.0) || !(p.c > 0.0))
        throw domain_error("sub-gamma parameters must be positive");
    if (!(epsilon > 0.0))
        throw domain_error("deviation epsilon must be positive, got " + std::to_string(epsilon));
    bound_result r;
    r.epsilon = epsilon;
    r.nu = p.nu;
    r.c = p.c;
    r.sided = tail_side::right_tail;
    r.log_bound = -(p.nu / (p.c * p.c)) * h_function(p.c * epsilon / p.nu);
    r.bound = std::exp(r.log_bound);
    return r;
}

/// Exact centered log-MGF of sum_j lambda_j (U_j - 1) with U_j ~ chi^2_1:
/// sum_j [-g lambda_j - 1/2 log(1 - 2 g lambda_j)], g < 1/(2 lambda_max).
inline double centered_log_mgf(const spectrum_summary& spec, double g) {
    if (!(2.0 * g * spec.lambda_max < 1.0))
        throw domain_error("log-MGF argument outside the convergence domain");
    double acc = 0.0;
    for (double lam : spec.eigenvalues) {
        const double x = 2.0 * g * lam;
        acc += -0.5 * (std::log1p(-x) + x);
    }
    return acc;
}

/// gamma^2 nu / (2 (1 - c gamma)), the sub-gamma envelope of the log-MGF.
inline double subgamma_log_mgf_envelope(const subgamma_params& p, double g) {
    if (!(g > 0.0 && g * p.c < 1.0))
        throw domain_error("envelope argument must lie in (0, 1/c)");
    return g * g * p.nu / (2.0 * (1.0 - p.c * g));
}

namespace detail {

inline bound_result two_sided_from(subgamma_params p, std::size_t m, double epsilon) {
    if (!(epsilon > 0.0))
        throw domain_error("deviation epsilon must be positive, got " + std::to_string(epsilon));
    bound_result r = chernoff_tail(p, epsilon * static_cast<double>(m));
    r.epsilon = epsilon;
    r.log_bound += std::log(2.0);
    r.bound = std::exp(r.log_bound);
    r.sided = tail_side::two_sided;
    return r;
}

} // namespace detail

/// P(|M_N(tau) - E M_N(tau)| > epsilon)
///   <= 2 exp(-(2 S / lbar^2) H(lbar epsilon (N - tau) / (2 S))),
/// S = sum_j lambda_j^2, lbar = 2 max_j lambda_j, from the full spectrum.
inline bound_result tamsd_deviation_bound(const spectrum_summary& spec, const lag_spec& lag,
                                          double epsilon) {
    if (spec.size() != lag.m())
        throw dimension_error("spectrum has " + std::to_string(spec.size()) +
                              " eigenvalues but N - tau = " + std::to_string(lag.m()));
    return detail::two_sided_from(make_subgamma_params(spec), lag.m(), epsilon);
}

/// Brownian-motion bound with sum lambda^2 = (N - tau) 4 D^2 tau (tau+1)(2 tau+1) / 6.
/// Only lambda_max comes from the eigensolver.
inline bound_result bm_deviation_bound(const process_model& model, const lag_spec& lag,
                                       double lambda_max, double epsilon) {
    if (model.kind() != process_kind::bm)
        throw domain_error("bm_deviation_bound needs a Brownian motion model");
    if (!(lambda_max > 0.0))
        throw domain_error("lambda_max must be positive");
    const subgamma_params p{2.0 * sum_lambda_sq_closed_form(model, lag), 2.0 * lambda_max};
    return detail::two_sided_from(p, lag.m(), epsilon);
}

inline bound_result bm_deviation_bound(const process_model& model, const lag_spec& lag,
                                       double epsilon) {
    return bm_deviation_bound(model, lag, spectrum(model, lag).lambda_max, epsilon);
}

/// FBM bound with sum lambda^2 = (N - tau) D^2 alpha(tau, H, N).
inline bound_result fbm_deviation_bound(const process_model& model, const lag_spec& lag,
                                        double lambda_max, double epsilon) {
    if (model.kind() != process_kind::fbm)
        throw domain_error("fbm_deviation_bound needs a fractional Brownian motion model");
    if (!(lambda_max > 0.0))
        throw domain_error("lambda_max must be positive");
    const subgamma_params p{2.0 * sum_lambda_sq_closed_form(model, lag), 2.0 * lambda_max};
    return detail::two_sided_from(p, lag.m(), epsilon);
}

inline bound_result fbm_deviation_bound(const process_model& model, const lag_spec& lag,
                                        double epsilon) {
    return fbm_deviation_bound(model, lag, spectrum(model, lag).lambda_max, epsilon);
}

/// One-sided bound for the exponent estimator beta_hat = ln M_N(tau) / ln tau (D = 1/2):
///   P(beta_hat - beta > eps)
///     <= exp(-((N - tau) alpha / (2 lbar^2)) H(2 lbar (tau^{eps+beta} - tau^beta) / alpha)),
/// i.e. the right-tail Chernoff bound at quadratic-form deviation (N - tau)(tau^{eps+beta} - tau^beta).
inline bound_result beta_estimator_bound(const process_model& model, const lag_spec& lag,
                                         double lambda_max, double epsilon) {
    if (lag.tau() < 2)
        throw domain_error("exponent estimator needs tau >= 2 (ln tau = 0 at tau = 1)");
    if (model.diffusion() != 0.5)
        throw unsupported_parameter_error(
            "exponent estimator bound assumes D = 1/2, got D = " +
            std::to_string(model.diffusion()));
    if (!(epsilon > 0.0))
        throw domain_error("deviation epsilon must be positive, got " + std::to_string(epsilon));
    if (!(lambda_max > 0.0))
        throw domain_error("lambda_max must be positive");

    const double tau = static_cast<double>(lag.tau());
    const double beta = model.beta();
    // tau^{eps+beta} - tau^beta without cancellation for small eps
    const double threshold = std::pow(tau, beta) * std::expm1(epsilon * std::log(tau));
    const subgamma_params p{2.0 * sum_lambda_sq_closed_form(model, lag), 2.0 * lambda_max};
    bound_result r = chernoff_tail(p, static_cast<double>(lag.m()) * threshold);
    r.epsilon = epsilon;
    return r;
}

inline bound_result beta_estimator_bound(const process_model& model, const lag_spec& lag,
                                         double epsilon) {
    if (lag.tau() < 2)
        throw domain_error("exponent estimator needs tau >= 2 (ln tau = 0 at tau = 1)");
    return beta_estimator_bound(model, lag, spectrum(model, lag).lambda_max, epsilon);
}

/// Smallest epsilon whose two-sided TAMSD bound equals target (0 < target <= 2).
inline double tamsd_epsilon_for_bound(const spectrum_summary& spec, const lag_spec& lag,
                                      double target) {
    if (!(target > 0.0 && target <= 2.0))
        throw domain_error("target bound must lie in (0, 2]");
    const subgamma_params p = make_subgamma_params(spec);
    const double v = -std::log(target / 2.0) * p.c * p.c / p.nu;
    return h_inverse(v) * p.nu / p.c / static_cast<double>(lag.m());
}

} // namespace tamsdld
