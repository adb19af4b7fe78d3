#pragma once

// Counter-based Philox4x32-10 generator and a Gaussian stream keyed by
// (master seed, trial index), so each Monte Carlo trial draws from its own
// reproducible stream regardless of scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace tamsdld {

using philox_counter = std::array<std::uint32_t, 4>;
using philox_key = std::array<std::uint32_t, 2>;

inline philox_counter philox4x32_10(philox_counter ctr, philox_key key) {
    constexpr std::uint32_t mul0 = 0xD2511F53u;
    constexpr std::uint32_t mul1 = 0xCD9E8D57u;
    constexpr std::uint32_t weyl0 = 0x9E3779B9u;
    constexpr std::uint32_t weyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += weyl0;
            key[1] += weyl1;
        }
        const std::uint64_t p0 = std::uint64_t{mul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{mul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Identifies one replication: the run's master seed and the trial index.
struct seed_path {
    std::uint64_t master = 0;
    std::uint64_t trial = 0;

    friend bool operator==(const seed_path&, const seed_path&) = default;
};

/// Standard normal variates from Philox blocks via Box-Muller.
class normal_stream {
public:
    explicit normal_stream(seed_path id)
        : key_{static_cast<std::uint32_t>(id.master), static_cast<std::uint32_t>(id.master >> 32)},
          trial_(id.trial) {}

    double operator()() {
        if (cached_) {
            cached_ = false;
            return spare_;
        }
        const philox_counter ctr{static_cast<std::uint32_t>(block_),
                                 static_cast<std::uint32_t>(block_ >> 32),
                                 static_cast<std::uint32_t>(trial_),
                                 static_cast<std::uint32_t>(trial_ >> 32)};
        ++block_;
        const philox_counter out = philox4x32_10(ctr, key_);
        const double u1 = to_unit(out[0], out[1]);
        const double u2 = to_unit(out[2], out[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        cached_ = true;
        return r * std::cos(angle);
    }

    // Uniform on the open interval (0, 1) with 52 random bits; (k + 1/2) 2^-52 is exact.
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
        return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
    }

private:
    philox_key key_;
    std::uint64_t trial_;
    std::uint64_t block_ = 0;
    double spare_ = 0.0;
    bool cached_ = false;
};

} // namespace tamsdld
