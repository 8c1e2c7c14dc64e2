#pragma once

#include <stdexcept>
#include <string>

namespace fieldroad {

/// Thrown when a series or iteration fails to reach its tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by erfc_ratio when the argument lies outside the guaranteed-accuracy sector.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Thrown by partial_fraction_coeffs when two roots are closer than the merge threshold.
struct MergeTooClose : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown by classify_regime when mu sits on a regime threshold.
struct AmbiguousRegime : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when the oscillatory quadrature exhausts its panel budget.
struct QuadratureNotConverged : std::runtime_error {
    QuadratureNotConverged(const std::string& msg, double achieved)
        : std::runtime_error(msg), achieved_error(achieved) {}
    double achieved_error;
};

/// Thrown by the finite-difference stepper when values blow up (CFL violation).
struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fieldroad
