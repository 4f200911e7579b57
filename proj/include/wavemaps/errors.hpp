#pragma once

#include <stdexcept>
#include <string>

namespace wavemaps {

/// Base class for numerical failures that are not caller mistakes.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field samples contain NaN/Inf or violate a structural invariant.
class InvalidState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Boundary value is not close to an integer multiple of pi.
class NonClassifiable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A shooting trajectory left the admissible band before the fitting point.
class BlownShot : public NumericalError {
public:
    BlownShot(const std::string& what, double where)
        : NumericalError(what), where_(where) {}
    double where() const noexcept { return where_; }

private:
    double where_;
};

/// Root finding on a shooting mismatch did not converge.
class ShootingFailure : public NumericalError {
public:
    ShootingFailure(const std::string& what, double best_a, double best_b, double best_mismatch)
        : NumericalError(what), best_a(best_a), best_b(best_b), best_mismatch(best_mismatch) {}

    double best_a;
    double best_b;
    double best_mismatch;
};

/// ODE integration diverged or exceeded its step budget.
class IntegrationFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Time evolution produced non-finite values without a blowup declaration.
class InstabilityAbort : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A parameter bracket does not separate the two outcomes.
class BracketError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The truncation radius is too small to resolve the requested states.
class DomainTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace wavemaps
