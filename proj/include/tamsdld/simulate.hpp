#pragma once

// Exact sampling of BM / FBM paths, per-path TAMSD and exponent estimates, and
// seeded, thread-count-independent Monte Carlo tail probabilities.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <unsupported/Eigen/FFT>

#include "tamsdld/error.hpp"
#include "tamsdld/models.hpp"
#include "tamsdld/random.hpp"

namespace tamsdld {

struct trajectory {
    std::vector<double> values; // X(1) .. X(N), with X(0) = 0
    process_model model = process_model::bm();
    seed_path seed;
};

/// Exact sampler of n consecutive lag-1 increments (fractional Gaussian noise).
///
/// Uses circulant embedding of the increment autocovariance into a circulant of
/// size 2 bit_ceil(n); the embedding eigenvalues come from one FFT. If an
/// eigenvalue is negative beyond -1e-10 * max it switches to a Cholesky factor
/// of the n x n covariance and records why in diagnostic().
class fgn_sampler {
public:
    struct workspace {
        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> freq;
        std::vector<std::complex<double>> time;
    };

    fgn_sampler(const process_model& model, std::size_t n, bool force_dense = false)
        : model_(model), n_(n) {
        if (n < 1)
            throw domain_error("sampler needs at least one increment");
        std::vector<double> acov(n + 1);
        for (std::size_t k = 0; k <= n; ++k)
            acov[k] = increment_autocov(model, 1, k);

        if (!force_dense && n >= 2 && try_circulant(acov))
            return;
        if (force_dense)
            diagnostic_ = "dense factorization requested";
        build_cholesky(acov);
    }

    std::size_t size() const noexcept { return n_; }
    const process_model& model() const noexcept { return model_; }
    bool uses_circulant() const noexcept { return !sqrt_eigen_.empty(); }
    const std::string& diagnostic() const noexcept { return diagnostic_; }

    void sample(normal_stream& rng, workspace& ws, std::span<double> out) const {
        if (out.size() != n_)
            throw dimension_error("output span does not match sampler size");
        if (uses_circulant()) {
            const std::size_t len = sqrt_eigen_.size();
            ws.freq.resize(len);
            for (std::size_t k = 0; k < len; ++k) {
                const double re = rng();
                const double im = rng();
                ws.freq[k] = {sqrt_eigen_[k] * re, sqrt_eigen_[k] * im};
            }
            ws.fft.fwd(ws.time, ws.freq);
            for (std::size_t i = 0; i < n_; ++i)
                out[i] = ws.time[i].real();
            return;
        }
        ws.freq.resize(n_);
        for (std::size_t i = 0; i < n_; ++i)
            ws.freq[i] = {rng(), 0.0};
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            const double* row = &chol_[i * n_];
            for (std::size_t k = 0; k <= i; ++k)
                acc += row[k] * ws.freq[k].real();
            out[i] = acc;
        }
    }

private:
    bool try_circulant(const std::vector<double>& acov) {
        const std::size_t half = std::bit_ceil(n_);
        const std::size_t len = 2 * half;
        std::vector<double> extended(half + 1);
        for (std::size_t k = 0; k <= half; ++k)
            extended[k] = k < acov.size() ? acov[k] : increment_autocov(model_, 1, k);
        std::vector<std::complex<double>> row(len);
        for (std::size_t k = 0; k <= half; ++k)
            row[k] = extended[k];
        for (std::size_t k = 1; k < half; ++k)
            row[len - k] = extended[k];

        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> eig;
        fft.fwd(eig, row);
        double max_eig = 0.0, min_eig = 0.0;
        for (const auto& v : eig) {
            max_eig = std::max(max_eig, v.real());
            min_eig = std::min(min_eig, v.real());
        }
        if (min_eig < -1e-10 * max_eig) {
            diagnostic_ = "circulant embedding has eigenvalue " + std::to_string(min_eig) +
                          "; using dense factorization";
            return false;
        }
        sqrt_eigen_.resize(len);
        for (std::size_t k = 0; k < len; ++k)
            sqrt_eigen_[k] = std::sqrt(std::max(0.0, eig[k].real()) / static_cast<double>(len));
        return true;
    }

    void build_cholesky(const std::vector<double>& acov) {
        chol_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = acov[i - j];
                for (std::size_t k = 0; k < j; ++k)
                    s -= chol_[i * n_ + k] * chol_[j * n_ + k];
                if (i == j) {
                    if (!(s > 0.0))
                        throw positive_definiteness_error(
                            "increment covariance is not positive definite", s);
                    chol_[i * n_ + i] = std::sqrt(s);
                } else {
                    chol_[i * n_ + j] = s / chol_[j * n_ + j];
                }
            }
        }
    }

    process_model model_;
    std::size_t n_;
    std::vector<double> sqrt_eigen_;
    std::vector<double> chol_;
    std::string diagnostic_;
};

/// Path X(1..N) as the running sum of sampled increments.
inline void sample_path_into(const fgn_sampler& sampler, fgn_sampler::workspace& ws, seed_path id,
                             std::span<double> path) {
    normal_stream rng(id);
    sampler.sample(rng, ws, path);
    for (std::size_t i = 1; i < path.size(); ++i)
        path[i] += path[i - 1];
}

inline trajectory sample_path(const process_model& model, std::size_t n, seed_path id) {
    if (n < 2)
        throw domain_error("trajectory length N must be >= 2");
    const fgn_sampler sampler(model, n);
    fgn_sampler::workspace ws;
    trajectory t{std::vector<double>(n), model, id};
    sample_path_into(sampler, ws, id, t.values);
    return t;
}

/// M_N(tau) = 1/(N - tau) sum_{j=1}^{N-tau} (X(j+tau) - X(j))^2
inline double tamsd(std::span<const double> path, std::size_t tau) {
    if (tau < 1 || tau >= path.size())
        throw domain_error("lag tau = " + std::to_string(tau) + " outside [1, N-1] for N = " +
                           std::to_string(path.size()));
    const std::size_t m = path.size() - tau;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = path[j + tau] - path[j];
        acc += d * d;
    }
    return acc / static_cast<double>(m);
}

inline double tamsd(const trajectory& t, std::size_t tau) { return tamsd(t.values, tau); }

/// beta_hat = ln M_N(tau) / ln tau
inline double beta_hat_from_tamsd(double msd, std::size_t tau) {
    if (tau < 2)
        throw domain_error("exponent estimator needs tau >= 2 (ln tau = 0 at tau = 1)");
    if (!(msd > 0.0))
        throw domain_error("degenerate path: TAMSD is zero");
    return std::log(msd) / std::log(static_cast<double>(tau));
}

inline double beta_hat(std::span<const double> path, std::size_t tau) {
    if (tau < 2)
        throw domain_error("exponent estimator needs tau >= 2 (ln tau = 0 at tau = 1)");
    return beta_hat_from_tamsd(tamsd(path, tau), tau);
}

inline double beta_hat(const trajectory& t, std::size_t tau) { return beta_hat(t.values, tau); }

// ---------------------------------------------------------------------------
// Monte Carlo

struct mc_options {
    std::size_t trials = 10'000;
    std::uint64_t master_seed = 0;
    unsigned threads = 0; // 0 = hardware concurrency
    std::optional<std::chrono::milliseconds> time_limit;
};

enum class tail_statistic { tamsd_two_sided, tamsd_right, beta_right };

inline const char* to_string(tail_statistic s) {
    switch (s) {
    case tail_statistic::tamsd_two_sided: return "tamsd_two_sided";
    case tail_statistic::tamsd_right: return "tamsd_right";
    case tail_statistic::beta_right: return "beta_right";
    }
    return "?";
}

enum class beta_centering { analytic, ensemble };

struct mc_tail_estimate {
    std::size_t trials = 0;
    std::size_t hits = 0;
    double p_hat = 0.0;
    double se = 0.0; // sqrt(p_hat (1 - p_hat) / trials)
    double ci_low = 0.0;
    double ci_high = 1.0;
    double epsilon = 0.0;
    double center = 0.0;
    tail_statistic statistic = tail_statistic::tamsd_two_sided;
};

/// Equal-tailed exact (Clopper-Pearson) binomial interval.
inline std::pair<double, double> clopper_pearson(std::size_t hits, std::size_t trials,
                                                 double confidence = 0.99) {
    using boost::math::binomial_distribution;
    const double alpha = 0.5 * (1.0 - confidence);
    const auto n = static_cast<double>(trials);
    const auto k = static_cast<double>(hits);
    const double lo =
        hits == 0 ? 0.0 : binomial_distribution<>::find_lower_bound_on_p(n, k, alpha);
    const double hi =
        hits == trials ? 1.0 : binomial_distribution<>::find_upper_bound_on_p(n, k, alpha);
    return {lo, hi};
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// TAMSD of every trial at every lag: result[lag_index][trial]. Trial i uses the
/// stream (master_seed, i), so the output does not depend on opts.threads.
inline std::vector<std::vector<double>> mc_tamsd_samples(const process_model& model,
                                                         std::size_t n,
                                                         std::span<const std::size_t> taus,
                                                         const mc_options& opts) {
    if (opts.trials < 1)
        throw domain_error("trials must be >= 1");
    if (n < 2)
        throw domain_error("trajectory length N must be >= 2");
    for (std::size_t tau : taus)
        lag_spec(n, tau);

    std::vector<std::vector<double>> out(taus.size(), std::vector<double>(opts.trials));
    const fgn_sampler sampler(model, n);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(resolve_threads(opts.threads), opts.trials));

    const auto start = std::chrono::steady_clock::now();
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> completed{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run = [&](std::size_t first, std::size_t last) {
        try {
            fgn_sampler::workspace ws;
            std::vector<double> path(n);
            for (std::size_t i = first; i < last; ++i) {
                if (stop.load(std::memory_order_relaxed))
                    return;
                if (opts.time_limit && std::chrono::steady_clock::now() - start > *opts.time_limit) {
                    stop = true;
                    return;
                }
                sample_path_into(sampler, ws, seed_path{opts.master_seed, i}, path);
                for (std::size_t t = 0; t < taus.size(); ++t)
                    out[t][i] = tamsd(path, taus[t]);
                completed.fetch_add(1, std::memory_order_relaxed);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
            stop = true;
        }
    };

    if (workers <= 1) {
        run(0, opts.trials);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (opts.trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t first = w * chunk;
            const std::size_t last = std::min(opts.trials, first + chunk);
            if (first < last)
                pool.emplace_back(run, first, last);
        }
    }

    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::bad_alloc&) {
            throw partial_result_error("Monte Carlo run ran out of memory", completed.load());
        }
    }
    if (stop)
        throw partial_result_error("Monte Carlo run exceeded its time limit", completed.load());
    return out;
}

/// Counts trials with a deviation above epsilon and attaches the binomial summary.
inline mc_tail_estimate summarize_tail(std::span<const double> values, double center,
                                       double epsilon, tail_statistic statistic) {
    if (!(epsilon > 0.0))
        throw domain_error("deviation epsilon must be positive");
    if (values.empty())
        throw domain_error("no Monte Carlo values");
    mc_tail_estimate e;
    e.trials = values.size();
    e.epsilon = epsilon;
    e.center = center;
    e.statistic = statistic;
    for (double v : values) {
        const double dev = v - center;
        const bool hit =
            statistic == tail_statistic::tamsd_two_sided ? std::abs(dev) > epsilon : dev > epsilon;
        e.hits += hit ? 1 : 0;
    }
    const auto n = static_cast<double>(e.trials);
    e.p_hat = static_cast<double>(e.hits) / n;
    e.se = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    std::tie(e.ci_low, e.ci_high) = clopper_pearson(e.hits, e.trials);
    return e;
}

inline double mean_of(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values)
        acc += v;
    return acc / static_cast<double>(values.size());
}

/// beta_hat of every trial from TAMSD samples at lag tau.
inline std::vector<double> beta_hat_samples(std::span<const double> tamsd_values, std::size_t tau) {
    std::vector<double> out(tamsd_values.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = beta_hat_from_tamsd(tamsd_values[i], tau);
    return out;
}

/// Monte Carlo estimate of the deviation probabilities over an epsilon grid.
/// A hit is |M - sigma_tau(0)| > eps, M - sigma_tau(0) > eps, or beta_hat - center > eps,
/// where center is 2H (analytic) or the ensemble mean of beta_hat.
inline std::vector<mc_tail_estimate> mc_tail(const process_model& model, const lag_spec& lag,
                                             std::span<const double> epsilons,
                                             tail_statistic statistic, const mc_options& opts,
                                             beta_centering centering = beta_centering::analytic) {
    const std::size_t tau = lag.tau();
    if (statistic == tail_statistic::beta_right && tau < 2)
        throw domain_error("exponent estimator needs tau >= 2 (ln tau = 0 at tau = 1)");
    for (double eps : epsilons)
        if (!(eps > 0.0))
            throw domain_error("deviation epsilon must be positive");

    const std::size_t taus[] = {tau};
    auto samples = mc_tamsd_samples(model, lag.n(), taus, opts);
    std::vector<double> values = std::move(samples[0]);
    double center = increment_mean_square(model, tau);
    if (statistic == tail_statistic::beta_right) {
        values = beta_hat_samples(values, tau);
        center = centering == beta_centering::analytic ? model.beta() : mean_of(values);
    }
    std::vector<mc_tail_estimate> out;
    out.reserve(epsilons.size());
    for (double eps : epsilons)
        out.push_back(summarize_tail(values, center, eps, statistic));
    return out;
}

inline mc_tail_estimate mc_tail(const process_model& model, const lag_spec& lag, double epsilon,
                                tail_statistic statistic, const mc_options& opts,
                                beta_centering centering = beta_centering::analytic) {
    const double eps[] = {epsilon};
    return mc_tail(model, lag, eps, statistic, opts, centering).front();
}

} // namespace tamsdld
