#pragma once

#include <stdexcept>
#include <string>

namespace fairmo {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define FAIRMO_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// numkit
FAIRMO_DEFINE_ERROR(SingularMatrix);
FAIRMO_DEFINE_ERROR(NoConvergence);
FAIRMO_DEFINE_ERROR(IterationLimit);
FAIRMO_DEFINE_ERROR(BadDistribution);
FAIRMO_DEFINE_ERROR(ShapeMismatch);

// ggf
FAIRMO_DEFINE_ERROR(DimensionMismatch);
FAIRMO_DEFINE_ERROR(DimensionTooLarge);
FAIRMO_DEFINE_ERROR(InvalidPreset);
FAIRMO_DEFINE_ERROR(InvalidTransfer);

// momdp
FAIRMO_DEFINE_ERROR(ParseError);
FAIRMO_DEFINE_ERROR(InvariantViolation);

// exact
FAIRMO_DEFINE_ERROR(GammaTooCloseToThreshold);

// optimal
FAIRMO_DEFINE_ERROR(LpFailure);

// agents
FAIRMO_DEFINE_ERROR(EmptyBatch);

// envs
FAIRMO_DEFINE_ERROR(BadParams);

// harness
FAIRMO_DEFINE_ERROR(Empty);
FAIRMO_DEFINE_ERROR(ZeroMean);
FAIRMO_DEFINE_ERROR(UnknownId);

#undef FAIRMO_DEFINE_ERROR

/// Discount factor outside the open interval (lower, 1) where a series converges.
class GammaOutOfRange : public Error {
public:
    GammaOutOfRange(double gamma, double lower)
        : Error("GammaOutOfRange: gamma " + std::to_string(gamma) + " outside valid interval (" +
                std::to_string(lower) + ", 1)"),
          gamma_(gamma), lower_(lower) {}
    double gamma() const noexcept { return gamma_; }
    double lower() const noexcept { return lower_; }

private:
    double gamma_, lower_;
};

/// Discount factor not above the approximation-bound validity threshold.
class GammaBelowThreshold : public Error {
public:
    GammaBelowThreshold(double gamma, double threshold)
        : Error("GammaBelowThreshold: gamma " + std::to_string(gamma) + " must exceed threshold " +
                std::to_string(threshold)),
          gamma_(gamma), threshold_(threshold) {}
    double gamma() const noexcept { return gamma_; }
    double threshold() const noexcept { return threshold_; }

private:
    double gamma_, threshold_;
};

} // namespace fairmo
