#pragma once

#include <stdexcept>
#include <string>

namespace ellv {

/// Invalid parameter value (out-of-domain rho, nonpositive n, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Matrix/vector dimension mismatch.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Singular or numerically singular linear system. Carries the reciprocal
/// condition number estimate that triggered the rejection.
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, double rcond_estimate)
        : std::runtime_error(what), rcond(rcond_estimate) {}
    double rcond;
};

/// Iteration cap reached before the requested tolerance. Carries the last
/// residual so callers can decide whether the partial answer is usable.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual(last_residual) {}
    double residual;
};

/// Iterates blew up (overflow/NaN) or a trajectory left the valid region.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double when = 0.0)
        : std::runtime_error(what), time(when) {}
    double time;
};

/// A closed-form expression was evaluated outside its domain.
class EvaluationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Generic numeric failure (eigensolver did not converge, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem with an experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ellv
