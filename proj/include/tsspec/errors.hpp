#pragma once

#include <stdexcept>
#include <string>

namespace tss {

/// Base for every error raised by the library.  `kind()` is a stable
/// machine-readable tag (used by the CLI error JSON); `is_validation()`
/// separates bad input from failed computation.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message, bool validation)
        : std::runtime_error(message), kind_(std::move(kind)), validation_(validation) {}

    const std::string& kind() const noexcept { return kind_; }
    bool is_validation() const noexcept { return validation_; }

private:
    std::string kind_;
    bool validation_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string kind, const std::string& message)
        : Error(std::move(kind), message, true) {}
};

class ComputationError : public Error {
public:
    ComputationError(std::string kind, const std::string& message)
        : Error(std::move(kind), message, false) {}
};

#define TSS_DEFINE_ERROR(Name, Base)                                   \
    class Name : public Base {                                         \
    public:                                                            \
        explicit Name(const std::string& message) : Base(#Name, message) {} \
    };

// time scale geometry
TSS_DEFINE_ERROR(OverlapError, ValidationError)
TSS_DEFINE_ERROR(ReversedInterval, ValidationError)
TSS_DEFINE_ERROR(DegenerateScale, ValidationError)
TSS_DEFINE_ERROR(NotInScale, ValidationError)
TSS_DEFINE_ERROR(EndpointNotBreakpoint, ValidationError)
TSS_DEFINE_ERROR(InvalidPotential, ValidationError)
TSS_DEFINE_ERROR(MissingPotentialValue, ValidationError)
TSS_DEFINE_ERROR(IndexOutOfRange, ValidationError)
TSS_DEFINE_ERROR(BackendMismatch, ValidationError)
TSS_DEFINE_ERROR(ParseError, ValidationError)
TSS_DEFINE_ERROR(WrongCount, ValidationError)
TSS_DEFINE_ERROR(LengthMismatch, ValidationError)
TSS_DEFINE_ERROR(NotSupported, ValidationError)
TSS_DEFINE_ERROR(NotExact, ValidationError)
TSS_DEFINE_ERROR(NotCommensurable, ValidationError)

// numerics
TSS_DEFINE_ERROR(IntegratorFailure, ComputationError)
TSS_DEFINE_ERROR(RootMissSuspected, ComputationError)
TSS_DEFINE_ERROR(PolynomialDegenerate, ComputationError)
TSS_DEFINE_ERROR(NonSimpleZero, ComputationError)
TSS_DEFINE_ERROR(PoleHit, ComputationError)
TSS_DEFINE_ERROR(LabelMismatch, ComputationError)

// inverse problem
TSS_DEFINE_ERROR(InconsistentData, ComputationError)
TSS_DEFINE_ERROR(DivisionDegenerate, ComputationError)
TSS_DEFINE_ERROR(NonLinearQuotient, ComputationError)

#undef TSS_DEFINE_ERROR

} // namespace tss
