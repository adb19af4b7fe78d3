#pragma once

// Covariance matrix of the lag-tau increment vector, its spectrum, and
// closed-form spectral aggregates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tamsdld/error.hpp"
#include "tamsdld/models.hpp"

namespace tamsdld {

/// Symmetric Toeplitz matrix given by its first row.
class toeplitz_spec {
public:
    explicit toeplitz_spec(std::vector<double> first_row) : row_(std::move(first_row)) {
        if (row_.empty())
            throw dimension_error("Toeplitz matrix must have dimension >= 1");
        if (!(row_[0] > 0.0))
            throw domain_error("Toeplitz diagonal must be positive");
    }

    std::size_t size() const noexcept { return row_.size(); }
    std::span<const double> first_row() const noexcept { return row_; }
    double operator[](std::size_t j) const { return row_[j]; }

    double at(std::size_t i, std::size_t k) const { return row_[i > k ? i - k : k - i]; }

    // Row-major dense copy.
    std::vector<double> dense() const {
        const std::size_t m = size();
        std::vector<double> a(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < m; ++k)
                a[i * m + k] = at(i, k);
        return a;
    }

private:
    std::vector<double> row_;
};

/// Eigenvalues (ascending) of the increment covariance and their aggregates.
struct spectrum_summary {
    std::vector<double> eigenvalues;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lambda_bar = 0.0; // 2 * lambda_max
    double sum_lambda = 0.0;
    double sum_lambda_sq = 0.0;

    std::size_t size() const noexcept { return eigenvalues.size(); }

    static spectrum_summary from_eigenvalues(std::vector<double> values) {
        if (values.empty())
            throw dimension_error("spectrum must contain at least one eigenvalue");
        std::sort(values.begin(), values.end());
        if (!(values.front() > 0.0))
            throw positive_definiteness_error("spectrum contains a non-positive eigenvalue",
                                              values.front());
        spectrum_summary s;
        s.lambda_min = values.front();
        s.lambda_max = values.back();
        s.lambda_bar = 2.0 * s.lambda_max;
        for (double v : values) {
            s.sum_lambda += v;
            s.sum_lambda_sq += v * v;
        }
        s.eigenvalues = std::move(values);
        return s;
    }
};

inline toeplitz_spec build_toeplitz(const process_model& model, const lag_spec& lag) {
    std::vector<double> row(lag.m());
    for (std::size_t j = 0; j < row.size(); ++j)
        row[j] = increment_autocov(model, lag.tau(), j);
    return toeplitz_spec(std::move(row));
}

namespace detail {

// Householder reduction of a symmetric row-major matrix to tridiagonal form.
// On return diag holds the diagonal and off[i] couples rows i-1 and i (off[0] = 0).
inline void householder_tridiagonalize(std::vector<double>& a, std::size_t n,
                                       std::vector<double>& diag, std::vector<double>& off) {
    diag.assign(n, 0.0);
    off.assign(n, 0.0);
    auto A = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k)
                scale += std::abs(A(i, k));
            if (scale == 0.0) {
                off[i] = A(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    A(i, k) /= scale;
                    h += A(i, k) * A(i, k);
                }
                double f = A(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                off[i] = scale * g;
                h -= f * g;
                A(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k)
                        g += A(j, k) * A(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k)
                        g += A(k, j) * A(i, k);
                    off[j] = g / h;
                    f += off[j] * A(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = A(i, j);
                    g = off[j] - hh * f;
                    off[j] = g;
                    for (std::size_t k = 0; k <= j; ++k)
                        A(j, k) -= f * off[k] + g * A(i, k);
                }
            }
        } else {
            off[i] = A(i, l);
        }
        diag[i] = h;
    }
    off[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        diag[i] = A(i, i);
}

// Implicit-shift QL iteration on a symmetric tridiagonal matrix; eigenvalues land in diag.
inline void tridiagonal_ql(std::vector<double>& diag, std::vector<double>& off,
                           std::size_t max_iterations_per_value = 64) {
    const int n = static_cast<int>(diag.size());
    if (n <= 1)
        return;
    for (int i = 1; i < n; ++i)
        off[i - 1] = off[i];
    off[n - 1] = 0.0;

    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        std::size_t iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
                if (std::abs(off[m]) <= eps * dd)
                    break;
            }
            if (m != l) {
                if (iter++ == max_iterations_per_value)
                    throw convergence_error("tridiagonal QL did not converge for eigenvalue " +
                                                std::to_string(l),
                                            iter);
                double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
                double r = std::hypot(g, 1.0);
                g = diag[m] - diag[l] + off[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * off[i];
                    const double b = c * off[i];
                    r = std::hypot(f, g);
                    off[i + 1] = r;
                    if (r == 0.0) {
                        diag[i + 1] -= p;
                        off[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = diag[i + 1] - p;
                    r = (diag[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    diag[i + 1] = g + p;
                    g = c * r - b;
                }
                if (r == 0.0 && i >= l)
                    continue;
                diag[l] -= p;
                off[l] = g;
                off[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace detail

/// Eigenvalues of a dense symmetric matrix (row-major, n x n), ascending.
/// Householder tridiagonalization followed by implicit QL; O(n^3).
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
    if (a.size() != n * n)
        throw dimension_error("matrix storage does not match dimension " + std::to_string(n));
    if (n == 0)
        return {};
    std::vector<double> diag, off;
    detail::householder_tridiagonalize(a, n, diag, off);
    detail::tridiagonal_ql(diag, off);
    std::sort(diag.begin(), diag.end());
    return diag;
}

/// Full spectrum of the Toeplitz matrix. Rejects matrices whose smallest
/// eigenvalue is not above 1e-14 * diagonal.
inline spectrum_summary spectrum(const toeplitz_spec& spec) {
    const std::size_t m = spec.size();
    const double diag = spec[0];
    std::vector<double> values =
        m == 1 ? std::vector<double>{diag} : symmetric_eigenvalues(spec.dense(), m);
    const double floor = 1e-14 * diag;
    if (values.front() <= floor)
        throw positive_definiteness_error(
            "increment covariance is not numerically positive definite: smallest eigenvalue " +
                std::to_string(values.front()),
            values.front());
    return spectrum_summary::from_eigenvalues(std::move(values));
}

inline spectrum_summary spectrum(const process_model& model, const lag_spec& lag) {
    return spectrum(build_toeplitz(model, lag));
}

/// alpha(tau, H, N) = sum_{i=0}^{N-tau-1} [(i+tau)^{2H} - 2 i^{2H} + |i-tau|^{2H}]^2
inline double alpha_coefficient(std::size_t tau, double hurst, std::size_t n) {
    const lag_spec lag(n, tau);
    double acc = 0.0;
    for (std::size_t i = 0; i < lag.m(); ++i) {
        const double k = detail::fbm_increment_kernel(hurst, tau, i);
        acc += k * k;
    }
    return acc;
}

/// Exact sum of squared eigenvalues, trace(Sigma^2) = M s(0)^2 + 2 sum_{j>=1} (M - j) s(j)^2.
inline double trace_of_square(const toeplitz_spec& spec) {
    const std::size_t m = spec.size();
    double acc = static_cast<double>(m) * spec[0] * spec[0];
    for (std::size_t j = 1; j < m; ++j)
        acc += 2.0 * static_cast<double>(m - j) * spec[j] * spec[j];
    return acc;
}

inline double sum_lambda_sq_trace(const process_model& model, const lag_spec& lag) {
    return trace_of_square(build_toeplitz(model, lag));
}

/// Closed form (N - tau) sum_{j=0}^{N-tau-1} sigma_tau(j)^2:
///   BM:  (N - tau) 4 D^2 tau (tau+1)(2 tau+1) / 6
///   FBM: (N - tau) D^2 alpha(tau, H, N)
/// It weights every off-diagonal lag once by N - tau, while trace(Sigma^2) weights it
/// twice by N - tau - j, so it equals the spectrum value only when sigma_tau(j) = 0
/// for all j >= 1 (BM or H = 1/2 at tau = 1). See trace_of_square for the exact value.
inline double sum_lambda_sq_closed_form(const process_model& model, const lag_spec& lag) {
    const double d = model.diffusion();
    const double m = static_cast<double>(lag.m());
    if (model.kind() == process_kind::bm) {
        // sum_{j<tau} (2D(tau-j))^2 needs every lag 0..tau-1 inside the matrix.
        if (lag.m() >= lag.tau()) {
            const double t = static_cast<double>(lag.tau());
            return m * 4.0 * d * d * t * (t + 1.0) * (2.0 * t + 1.0) / 6.0;
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < lag.m(); ++j) {
            const double s = 2.0 * d * static_cast<double>(lag.tau() - j);
            acc += s * s;
        }
        return m * acc;
    }
    return m * d * d * alpha_coefficient(lag.tau(), model.hurst(), lag.n());
}

/// Row-sum bounds on the largest eigenvalue.
struct eigenvalue_sandwich {
    double lower = 0.0;       // first-row sum
    double upper = 0.0;       // sigma(0) + 2 sum_{j=1}^{J} sigma(j)
    double max_row_sum = 0.0; // largest row sum of the matrix
    // True when the row-sum argument certifies lower <= lambda_max <= upper:
    // all entries nonnegative and upper equals the largest row sum.
    bool guaranteed = false;
};

inline eigenvalue_sandwich max_eigenvalue_sandwich(const toeplitz_spec& spec) {
    const std::size_t m = spec.size();
    const auto row = spec.first_row();
    eigenvalue_sandwich out;
    if (m == 1) {
        out.lower = out.upper = out.max_row_sum = row[0];
        out.guaranteed = true;
        return out;
    }
    out.lower = std::accumulate(row.begin(), row.end(), 0.0);

    const std::size_t J = (m % 2 == 1) ? (m - 1) / 2 : m / 2 - 1;
    double central = 0.0;
    for (std::size_t j = 1; j <= J; ++j)
        central += row[j];
    out.upper = row[0] + 2.0 * central;

    // Row i sums sigma(0) + sum_{j=1}^{i} sigma(j) + sum_{j=1}^{m-1-i} sigma(j).
    std::vector<double> prefix(m, 0.0);
    for (std::size_t j = 1; j < m; ++j)
        prefix[j] = prefix[j - 1] + row[j];
    out.max_row_sum = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
        out.max_row_sum = std::max(out.max_row_sum, row[0] + prefix[i] + prefix[m - 1 - i]);

    const bool nonnegative = std::all_of(row.begin(), row.end(), [](double v) { return v >= 0.0; });
    // For even m the upper value omits sigma(m/2), which the two central rows contain.
    const bool upper_is_max_row = (m % 2 == 1) || row[m / 2] == 0.0;
    out.guaranteed = nonnegative && upper_is_max_row;
    return out;
}

inline eigenvalue_sandwich max_eigenvalue_sandwich(const process_model& model,
                                                   const lag_spec& lag) {
    return max_eigenvalue_sandwich(build_toeplitz(model, lag));
}

/// Brownian-motion closed forms D tau (tau+1) <= lambda_max <= 2 D tau^2,
/// valid once the matrix holds every nonzero lag (N - tau >= 2 tau - 1).
inline std::pair<double, double> bm_sandwich_closed_form(double diffusion, std::size_t tau) {
    const double t = static_cast<double>(tau);
    return {diffusion * t * (t + 1.0), 2.0 * diffusion * t * t};
}

/// Unit-lag FBM closed forms:
///   lower = D[(N-1)^{2H} - (N-2)^{2H} + 1]
///   upper = 2D[(N/2)^{2H} - ((N-2)/2)^{2H}]       (N even)
///   upper = 2D[((N-1)/2)^{2H} - ((N-3)/2)^{2H}]   (N odd)
inline std::pair<double, double> fbm_unit_lag_sandwich_closed_form(double hurst, double diffusion,
                                                                   std::size_t n) {
    if (n < 3)
        throw domain_error("unit-lag sandwich closed form needs N >= 3");
    const double h2 = 2.0 * hurst;
    const double nn = static_cast<double>(n);
    const double lower = diffusion * (std::pow(nn - 1.0, h2) - std::pow(nn - 2.0, h2) + 1.0);
    const double upper =
        n % 2 == 0
            ? 2.0 * diffusion * (std::pow(nn / 2.0, h2) - std::pow((nn - 2.0) / 2.0, h2))
            : 2.0 * diffusion * (std::pow((nn - 1.0) / 2.0, h2) - std::pow((nn - 3.0) / 2.0, h2));
    return {lower, upper};
}

} // namespace tamsdld
