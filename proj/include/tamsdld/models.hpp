#pragma once

// Gaussian process models and the covariance of their lag-tau increments.

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>

#include "tamsdld/error.hpp"

namespace tamsdld {

enum class process_kind { bm, fbm };

inline const char* to_string(process_kind k) {
    return k == process_kind::bm ? "bm" : "fbm";
}

/// A Brownian motion or a fractional Brownian motion with
/// E[X(t)X(s)] = D (|t|^{2H} + |s|^{2H} - |t-s|^{2H}).
/// Brownian motion is treated as H = 1/2.
class process_model {
public:
    static process_model bm(double diffusion = 0.5) {
        return process_model(process_kind::bm, diffusion, 0.5);
    }

    static process_model fbm(double hurst, double diffusion = 0.5) {
        return process_model(process_kind::fbm, diffusion, hurst);
    }

    process_kind kind() const noexcept { return kind_; }
    double diffusion() const noexcept { return diffusion_; }
    double hurst() const noexcept { return hurst_; }

    // Scaling exponent of the mean TAMSD, beta = 2H.
    double beta() const noexcept { return 2.0 * hurst_; }

    friend bool operator==(const process_model&, const process_model&) = default;

private:
    process_model(process_kind kind, double diffusion, double hurst)
        : kind_(kind), diffusion_(diffusion), hurst_(hurst) {
        if (!(diffusion > 0.0) || !std::isfinite(diffusion))
            throw domain_error("diffusion coefficient must be positive and finite, got " +
                               std::to_string(diffusion));
        if (!(hurst > 0.0 && hurst < 1.0))
            throw domain_error("Hurst index must lie in (0, 1), got " + std::to_string(hurst));
    }

    process_kind kind_;
    double diffusion_;
    double hurst_;
};

/// Trajectory length N on the grid t = 1..N and lag tau, 1 <= tau <= N-1.
class lag_spec {
public:
    lag_spec(std::size_t n, std::size_t tau) : n_(n), tau_(tau) {
        if (tau < 1)
            throw domain_error("lag tau must be >= 1");
        if (n < tau + 1)
            throw domain_error("lag tau = " + std::to_string(tau) +
                               " requires trajectory length N >= tau + 1, got N = " +
                               std::to_string(n));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t tau() const noexcept { return tau_; }
    // Number of lag-tau increments, N - tau.
    std::size_t m() const noexcept { return n_ - tau_; }

    friend bool operator==(const lag_spec&, const lag_spec&) = default;

private:
    std::size_t n_;
    std::size_t tau_;
};

namespace detail {

// (j+tau)^{2H} - 2 j^{2H} + |j-tau|^{2H}
inline double fbm_increment_kernel(double hurst, std::size_t tau, std::size_t j) {
    const double two_h = 2.0 * hurst;
    const double a = static_cast<double>(j + tau);
    const double b = static_cast<double>(j);
    const double c = static_cast<double>(j > tau ? j - tau : tau - j);
    return std::pow(a, two_h) - 2.0 * std::pow(b, two_h) + std::pow(c, two_h);
}

} // namespace detail

/// Cov(X(t+tau) - X(t), X(t+j+tau) - X(t+j)).
inline double increment_autocov(const process_model& model, std::size_t tau, std::size_t j) {
    if (tau < 1)
        throw domain_error("lag tau must be >= 1");
    const double d = model.diffusion();
    if (model.kind() == process_kind::bm)
        return j + 1 <= tau ? 2.0 * d * static_cast<double>(tau - j) : 0.0;
    return d * detail::fbm_increment_kernel(model.hurst(), tau, j);
}

/// E[M_N(tau)] = sigma_tau(0) = 2 D tau^{2H}.
inline double increment_mean_square(const process_model& model, std::size_t tau) {
    return increment_autocov(model, tau, 0);
}

} // namespace tamsdld
