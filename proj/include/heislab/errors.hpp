/**
 * @file errors.hpp
 * @brief Exception types shared by all heislab modules.
 *
 * Every failure mode named by a module contract maps onto one of these
 * classes. Numerical failures carry the offending residual so callers can
 * report it without re-running the computation.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace heis {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch, non-positive scale factors and similar caller bugs.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A map was evaluated outside its declared domain box.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical precondition failed; `residual` is the measured violation.
class PreconditionError : public Error {
public:
    PreconditionError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

/// The CC-distance optimizer could not close the endpoint constraint.
class ConstraintError : public Error {
public:
    ConstraintError(const std::string& what, double best_residual)
        : Error(what), best_residual(best_residual) {}
    double best_residual;
};

/// Generating-function integration found a non-exact 1-form.
class NotSymplecticError : public Error {
public:
    NotSymplecticError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

/// Newton iteration of the implicit midpoint step diverged.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, std::size_t step)
        : Error(what), step(step) {}
    std::size_t step;
};

/// Two routes to the same quantity disagreed (e.g. vertical flow not vertical).
class ConsistencyError : public Error {
public:
    ConsistencyError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

/// A proven inequality failed numerically; always an implementation bug.
class ViolationError : public Error {
public:
    ViolationError(const std::string& what, double excess)
        : Error(what), excess(excess) {}
    double excess;
};

}  // namespace heis
