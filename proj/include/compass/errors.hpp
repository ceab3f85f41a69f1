#pragma once

#include <stdexcept>
#include <string>

namespace compass {

/// Raised when a computation loses too many digits to cancellation, an
/// integrator violates its invariants, or two redundant evaluation routes
/// disagree beyond tolerance.  Callers should treat the result as unusable
/// rather than degraded.
class numerics_error : public std::runtime_error {
public:
    explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a truncated basis is too small for the requested state or
/// displacement (tail mass or leakage above threshold).
class cutoff_error : public numerics_error {
public:
    explicit cutoff_error(const std::string& what) : numerics_error(what) {}
};

/// Raised when an integration domain or contour search region does not cover
/// the support it needs to.
class coverage_error : public numerics_error {
public:
    explicit coverage_error(const std::string& what) : numerics_error(what) {}
};

}  // namespace compass
