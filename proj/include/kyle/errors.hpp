#ifndef KYLE_ERRORS_HPP
#define KYLE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kyle {

// Hard errors thrown by the numerical layer. Per-path simulation failures
// (state escape, density underflow, suspected explosion) are not exceptions;
// they are recorded as PathError flags and excluded from aggregates.

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainViolation : std::domain_error {
    using std::domain_error::domain_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct InconsistentBundle : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientPaths : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepResolution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kyle

#endif
