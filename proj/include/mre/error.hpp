#pragma once

#include <stdexcept>
#include <string>

namespace mre {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (shapes, symmetry, definiteness, rank).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The views cannot be met by any admissible distribution, e.g. targets outside
/// the convex hull of the scenario features or an updated covariance that is not PD.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// An iterative routine hit its iteration budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double last_residual)
        : Error(what), iterations_(iterations), last_residual_(last_residual) {}

    int iterations() const noexcept { return iterations_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    int iterations_;
    double last_residual_;
};

/// The HMC sampler could not reach a usable acceptance rate during burn-in.
class TuningError : public Error {
public:
    TuningError(const std::string& what, double acceptance_rate, double step_size)
        : Error(what), acceptance_rate_(acceptance_rate), step_size_(step_size) {}

    double acceptance_rate() const noexcept { return acceptance_rate_; }
    double step_size() const noexcept { return step_size_; }

private:
    double acceptance_rate_;
    double step_size_;
};

/// A user callable returned NaN or infinity.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace mre
