#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bilop {

using cplx = std::complex<double>;

/// A point in R^n for n <= 2. Components beyond the active dimension are zero.
using Vec = std::array<double, 2>;

inline constexpr double pi = std::numbers::pi;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or mismatched arguments (grid mismatch, bad exponent, bad config).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A computation was refused because its cost exceeds the configured budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical convergence guard failed.
class ToleranceError : public Error {
public:
    ToleranceError(const std::string& what, double first, double second)
        : Error(what), first_(first), second_(second) {}
    double first() const { return first_; }
    double second() const { return second_; }

private:
    double first_;
    double second_;
};

/// Number of worker threads: BILOP_THREADS if set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, count). Each index is processed exactly once and
/// results must be written to per-index storage, so the outcome does not
/// depend on the number of threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// SplitMix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace bilop
