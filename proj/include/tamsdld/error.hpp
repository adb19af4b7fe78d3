#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tamsdld {

// Base of everything the library throws.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (x <= 0, tau out of range, ...).
class domain_error : public error {
public:
    using error::error;
};

// Model parameter that the operation does not support (e.g. D != 1/2 for the exponent bound).
class unsupported_parameter_error : public error {
public:
    using error::error;
};

class dimension_error : public error {
public:
    using error::error;
};

// Iterative method failed to converge.
class convergence_error : public error {
public:
    convergence_error(const std::string& what, std::size_t iterations)
        : error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

class positive_definiteness_error : public error {
public:
    positive_definiteness_error(const std::string& what, double eigenvalue)
        : error(what), eigenvalue_(eigenvalue) {}

    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

// Series hit its term cap before reaching the requested mass tolerance.
class truncation_error : public error {
public:
    truncation_error(const std::string& what, double deficit, std::size_t terms)
        : error(what), deficit_(deficit), terms_(terms) {}

    double deficit() const noexcept { return deficit_; }
    std::size_t terms() const noexcept { return terms_; }

private:
    double deficit_;
    std::size_t terms_;
};

// Monte Carlo run stopped before all trials finished.
class partial_result_error : public error {
public:
    partial_result_error(const std::string& what, std::size_t completed)
        : error(what + " (" + std::to_string(completed) + " trials completed)"),
          completed_(completed) {}

    std::size_t completed_trials() const noexcept { return completed_; }

private:
    std::size_t completed_;
};

} // namespace tamsdld
