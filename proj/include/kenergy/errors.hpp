#pragma once

#include <stdexcept>
#include <string>

namespace kenergy {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define KENERGY_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                           \
    public:                                                               \
        using Error::Error;                                               \
        const char* kind() const noexcept override { return #Name; }      \
    }

KENERGY_DEFINE_ERROR(NonConvexInput);
KENERGY_DEFINE_ERROR(DomainMismatch);
KENERGY_DEFINE_ERROR(DegenerateHessian);
KENERGY_DEFINE_ERROR(BoundaryDivergence);
KENERGY_DEFINE_ERROR(MassDeficit);
KENERGY_DEFINE_ERROR(EmptyFamily);
KENERGY_DEFINE_ERROR(NonConvexDirection);
KENERGY_DEFINE_ERROR(HypothesisFailed);
KENERGY_DEFINE_ERROR(Unbounded);
KENERGY_DEFINE_ERROR(ConfigError);
KENERGY_DEFINE_ERROR(IoError);
KENERGY_DEFINE_ERROR(InvalidArgument);

#undef KENERGY_DEFINE_ERROR

/// Raised when the K-energy minimizer hits its iteration cap.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double gradient_norm, int iterations)
        : Error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}
    const char* kind() const noexcept override { return "NonConvergence"; }
    double gradient_norm() const noexcept { return gradient_norm_; }
    int iterations() const noexcept { return iterations_; }

private:
    double gradient_norm_;
    int iterations_;
};

}  // namespace kenergy
