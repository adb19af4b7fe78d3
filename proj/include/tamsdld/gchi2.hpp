#pragma once

// Exact law of the TAMSD of a Gaussian vector: (N - tau) M_N(tau) is the
// generalized chi-squared sum_j lambda_j U_j, expanded as a gamma mixture
//
//   (N - tau) M_N(tau)  ~  sum_k C delta_k  Gamma(M/2 + k, scale 2 lambda_1),
//
// with lambda_1 the smallest eigenvalue, C = prod_j (lambda_1/lambda_j)^{1/2},
// gamma_k = sum_j (1 - lambda_1/lambda_j)^k / (2k) and
// delta_{k+1} = 1/(k+1) sum_{i=1}^{k+1} i gamma_i delta_{k+1-i}, delta_0 = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tamsdld/error.hpp"
#include "tamsdld/special.hpp"
#include "tamsdld/toeplitz_eigen.hpp"

namespace tamsdld {

struct series_options {
    double mass_tolerance = 1e-12;
    std::size_t max_terms = 10'000'000;
};

/// Truncated mixture representation. weights[k] = C * delta_k.
struct gchi2_series {
    std::size_t m = 0;             // N - tau, number of chi-squared summands
    double lambda1 = 0.0;          // smallest eigenvalue
    double lambda_max = 0.0;
    double log_c = 0.0;            // log C = 1/2 sum_j log(lambda_1 / lambda_j)
    std::vector<double> ratios;    // q_j = 1 - lambda_1/lambda_j, ascending
    std::vector<double> gamma_coeffs; // gamma_1 .. gamma_K
    std::vector<double> weights;      // C delta_0 .. C delta_K
    std::size_t k_max = 0;            // K
    double mass = 0.0;                // C sum_{k<=K} delta_k
    double mass_deficit = 0.0;        // max(0, 1 - mass)

    double shape0() const noexcept { return 0.5 * static_cast<double>(m); }
    // Gamma scale of the k-th component for (N - tau) M_N(tau).
    double quadratic_form_scale() const noexcept { return 2.0 * lambda1; }
    // Gamma scale of the k-th component for M_N(tau) itself.
    double tamsd_scale() const noexcept { return 2.0 * lambda1 / static_cast<double>(m); }

    // Cumulative weights; prefix[k] = sum_{i<k} weights[i].
    std::vector<double> prefix;
};

namespace detail {

inline double compensated_add(double& sum, double& carry, double v) {
    // Neumaier summation
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
        carry += (sum - t) + v;
    else
        carry += (v - t) + sum;
    sum = t;
    return sum + carry;
}

} // namespace detail

/// Runs the delta recursion until the mixture mass reaches 1 - mass_tolerance.
///
/// The convolution is evaluated through per-eigenvalue accumulators
/// A_j(k) = sum_{i=1}^{k} q_j^i delta_{k-i}, which obey A_j(k+1) = q_j (A_j(k) + delta_k)
/// and give delta_{k+1} = sum_j A_j(k+1) / (2(k+1)); cost O(M K) instead of O(K^2).
/// delta is carried with a power-of-two scale so it cannot overflow.
inline gchi2_series build_series(const spectrum_summary& spec, series_options opts = {}) {
    if (!(opts.mass_tolerance > 0.0 && opts.mass_tolerance < 1.0))
        throw domain_error("mass tolerance must lie in (0, 1)");
    if (spec.size() == 0)
        throw dimension_error("empty spectrum");
    if (!(spec.lambda_min > 0.0))
        throw positive_definiteness_error("series needs a positive spectrum", spec.lambda_min);

    gchi2_series s;
    s.m = spec.size();
    s.lambda1 = spec.lambda_min;
    s.lambda_max = spec.lambda_max;

    // Eigenvalues equal to lambda_1 contribute nothing beyond the shape M/2.
    std::vector<double> q;
    q.reserve(s.m);
    double log_c = 0.0;
    for (double lam : spec.eigenvalues) {
        const double r = s.lambda1 / lam;
        log_c += 0.5 * std::log(r);
        s.ratios.push_back(1.0 - r);
        if (r < 1.0)
            q.push_back(1.0 - r);
    }
    s.log_c = log_c;

    const double ln2 = std::log(2.0);
    constexpr int rescale_bits = 512;
    const double rescale = std::ldexp(1.0, -rescale_bits);
    const double rescale_trigger = std::ldexp(1.0, rescale_bits);

    std::vector<double> acc(q.size(), 0.0);
    std::vector<double> powers(q.size(), 1.0);
    long exponent = 0; // delta_k = scaled_delta * 2^exponent
    double scaled_delta = 1.0;

    double mass = 0.0, carry = 0.0;
    auto push_weight = [&](double scaled) {
        const double w =
            scaled > 0.0 ? std::exp(std::log(scaled) + log_c + static_cast<double>(exponent) * ln2)
                         : 0.0;
        s.weights.push_back(w);
        return detail::compensated_add(mass, carry, w);
    };

    double total = push_weight(scaled_delta);
    std::size_t k = 0;
    // half the tolerance, so rounding in cdf + tail cannot push the deficit past it
    const double target = 1.0 - 0.5 * opts.mass_tolerance;
    while (total < target) {
        if (k >= opts.max_terms)
        {
            std::ostringstream msg;
            msg << "gamma-mixture series reached " << k << " terms with mass deficit "
                << std::setprecision(3) << 1.0 - total << " (tolerance " << opts.mass_tolerance
                << ")";
            throw truncation_error(msg.str(), 1.0 - total, k);
        }
        double sum_acc = 0.0;
        double gamma = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            acc[j] = q[j] * (acc[j] + scaled_delta);
            sum_acc += acc[j];
            powers[j] *= q[j];
            gamma += powers[j];
        }
        ++k;
        s.gamma_coeffs.push_back(gamma / (2.0 * static_cast<double>(k)));
        scaled_delta = sum_acc / (2.0 * static_cast<double>(k));
        if (scaled_delta > rescale_trigger) {
            scaled_delta *= rescale;
            for (double& a : acc)
                a *= rescale;
            exponent += rescale_bits;
        }
        total = push_weight(scaled_delta);
    }

    s.k_max = k;
    s.mass = total;
    s.mass_deficit = std::max(0.0, 1.0 - total);
    s.prefix.resize(s.weights.size() + 1, 0.0);
    double pc = 0.0, psum = 0.0;
    for (std::size_t i = 0; i < s.weights.size(); ++i)
        s.prefix[i + 1] = detail::compensated_add(psum, pc, s.weights[i]);
    return s;
}

inline gchi2_series build_series(const spectrum_summary& spec, double mass_tolerance) {
    return build_series(spec, series_options{mass_tolerance});
}

namespace detail {

struct term_window {
    std::size_t lo;
    std::size_t hi; // inclusive
};

// Mixture components whose shape a0 + k sits within ~10 sqrt(y) of y; outside it
// the regularized gamma functions are 0 or 1 to far below double precision.
// The window always contains at least one end of the index range so far-tail
// values keep relative accuracy.
inline term_window window_for(const gchi2_series& s, double y) {
    const double a0 = s.shape0();
    const double half = 10.0 * std::sqrt(y + 1.0) + 20.0;
    const double centre = y - a0;
    const double kmax = static_cast<double>(s.k_max);
    double lo = std::clamp(std::ceil(centre - half), 0.0, kmax);
    double hi = std::clamp(std::floor(centre + half), 0.0, kmax);
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Lower-tail mixture sum_k w_k P(a0+k, y), y on the unit gamma scale.
inline double mixture_lower(const gchi2_series& s, double y) {
    if (y <= 0.0)
        return 0.0;
    const auto win = window_for(s, y);
    const double a0 = s.shape0();
    // P(a, y) = P(a+1, y) + y^a e^{-y} / Gamma(a+1), walked downward.
    double p = special::gamma_p(a0 + static_cast<double>(win.hi), y);
    double sum = s.weights[win.hi] * p;
    for (std::size_t k = win.hi; k-- > win.lo;) {
        p += special::poisson_weight(a0 + static_cast<double>(k), y);
        sum += s.weights[k] * p;
    }
    return s.prefix[win.lo] + sum;
}

// Upper-tail mixture sum_k w_k Q(a0+k, y).
inline double mixture_upper(const gchi2_series& s, double y) {
    if (y <= 0.0)
        return s.mass;
    const auto win = window_for(s, y);
    const double a0 = s.shape0();
    // Q(a+1, y) = Q(a, y) + y^a e^{-y} / Gamma(a+1), walked upward.
    double qv = special::gamma_q(a0 + static_cast<double>(win.lo), y);
    double sum = s.weights[win.lo] * qv;
    for (std::size_t k = win.lo + 1; k <= win.hi; ++k) {
        qv += special::poisson_weight(a0 + static_cast<double>(k - 1), y);
        sum += s.weights[k] * qv;
    }
    return (s.prefix.back() - s.prefix[win.hi + 1]) + sum;
}

// Mixture density on the unit gamma scale.
inline double mixture_density(const gchi2_series& s, double y) {
    const auto win = window_for(s, y);
    const double a0 = s.shape0();
    double sum = 0.0;
    for (std::size_t k = win.lo; k <= win.hi; ++k) {
        if (s.weights[k] == 0.0)
            continue;
        sum += s.weights[k] *
               std::exp(special::log_gamma_density(a0 + static_cast<double>(k), y));
    }
    return sum;
}

inline void require_positive(double x, const char* what) {
    if (!(x > 0.0))
        throw domain_error(std::string(what) + " must be positive, got " + std::to_string(x));
}

} // namespace detail

/// Density of M_N(tau) at x > 0.
inline double tamsd_pdf(const gchi2_series& s, double x) {
    detail::require_positive(x, "TAMSD density argument");
    const double theta = s.tamsd_scale();
    return detail::mixture_density(s, x / theta) / theta;
}

/// P(M_N(tau) <= w).
inline double tamsd_cdf(const gchi2_series& s, double w) {
    detail::require_positive(w, "TAMSD CDF argument");
    return detail::mixture_lower(s, w / s.tamsd_scale());
}

/// P(M_N(tau) > w), using the regularized upper incomplete gamma.
inline double tamsd_tail(const gchi2_series& s, double w) {
    detail::require_positive(w, "TAMSD tail argument");
    return detail::mixture_upper(s, w / s.tamsd_scale());
}

/// Same three functions for the quadratic form (N - tau) M_N(tau).
inline double quadratic_form_pdf(const gchi2_series& s, double q) {
    detail::require_positive(q, "quadratic form density argument");
    const double theta = s.quadratic_form_scale();
    return detail::mixture_density(s, q / theta) / theta;
}

inline double quadratic_form_cdf(const gchi2_series& s, double q) {
    detail::require_positive(q, "quadratic form CDF argument");
    return detail::mixture_lower(s, q / s.quadratic_form_scale());
}

inline double quadratic_form_tail(const gchi2_series& s, double q) {
    detail::require_positive(q, "quadratic form tail argument");
    return detail::mixture_upper(s, q / s.quadratic_form_scale());
}

/// Quantile of M_N(tau) by bisection on the CDF (60 halvings).
inline double tamsd_quantile(const gchi2_series& s, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw domain_error("quantile level must lie in (0, 1)");
    if (p > s.mass)
        throw domain_error("quantile level exceeds the retained series mass");
    double lo = 0.0;
    double hi = s.tamsd_scale() * (s.shape0() + 1.0);
    for (int i = 0; i < 2100 && tamsd_cdf(s, hi) < p; ++i) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid > 0.0 && tamsd_cdf(s, mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// MGF of (N - tau) M_N(tau):  C (1 - 2 lambda_1 s)^{-M/2} exp(sum_k gamma_k (1 - 2 lambda_1 s)^{-k}),
/// defined for s < 1 / (2 lambda_max). gamma_k beyond the stored K are generated on demand.
inline double tamsd_mgf(const gchi2_series& series, double s) {
    const double limit = 1.0 / (2.0 * series.lambda_max);
    if (!(s < limit))
        throw domain_error("MGF argument must be below 1/(2 lambda_max) = " +
                           std::to_string(limit));
    const double t = 1.0 / (1.0 - 2.0 * series.lambda1 * s);
    const double q_max = series.ratios.empty() ? 0.0 : series.ratios.back();
    const double rho = q_max * t; // geometric decay rate of the terms
    double sum = 0.0;
    if (rho > 0.0) {
        double carry = 0.0, total = 0.0;
        double tk = 1.0;
        std::vector<double> powers;
        constexpr std::size_t cap = 50'000'000;
        for (std::size_t k = 1; k <= cap; ++k) {
            tk *= t;
            double g;
            if (k <= series.gamma_coeffs.size()) {
                g = series.gamma_coeffs[k - 1];
            } else {
                if (powers.empty()) {
                    powers.reserve(series.ratios.size());
                    for (double qj : series.ratios)
                        powers.push_back(std::pow(qj, static_cast<double>(k - 1)));
                }
                g = 0.0;
                for (std::size_t j = 0; j < powers.size(); ++j) {
                    powers[j] *= series.ratios[j];
                    g += powers[j];
                }
                g /= 2.0 * static_cast<double>(k);
            }
            const double term = g * tk;
            total = detail::compensated_add(sum, carry, term);
            // remaining terms are bounded by a geometric series with ratio rho
            if (term * rho / (1.0 - rho) <= 1e-17 * total) {
                sum = total;
                break;
            }
            if (k == cap)
                throw convergence_error("MGF series did not converge", cap);
        }
    }
    return std::exp(series.log_c + series.shape0() * std::log(t) + sum);
}

/// Characteristic function of (N - tau) M_N(tau): prod_j (1 - 2 i lambda_j k)^{-1/2}.
inline std::complex<double> tamsd_cf(const spectrum_summary& spec, double k) {
    std::complex<double> log_phi{0.0, 0.0};
    for (double lam : spec.eigenvalues)
        log_phi -= 0.5 * std::log(std::complex<double>(1.0, -2.0 * lam * k));
    return std::exp(log_phi);
}

} // namespace tamsdld
