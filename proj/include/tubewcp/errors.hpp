#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tubewcp {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TUBEWCP_DEFINE_ERROR(NAME)                                            \
    class NAME final : public Error {                                         \
    public:                                                                    \
        using Error::Error;                                                    \
    }

// geometry
TUBEWCP_DEFINE_ERROR(VanishingCurvature);
TUBEWCP_DEFINE_ERROR(NotUnitSpeed);
TUBEWCP_DEFINE_ERROR(DegenerateParametrization);
TUBEWCP_DEFINE_ERROR(SingularCurve);

// fermi
TUBEWCP_DEFINE_ERROR(OutOfChart);
TUBEWCP_DEFINE_ERROR(InvalidChart);
TUBEWCP_DEFINE_ERROR(DegenerateMetric);
TUBEWCP_DEFINE_ERROR(UnsupportedBase);
TUBEWCP_DEFINE_ERROR(EmptySample);

// reach
TUBEWCP_DEFINE_ERROR(InsufficientSamples);

// analysis
TUBEWCP_DEFINE_ERROR(BadExponent);
TUBEWCP_DEFINE_ERROR(NonIntegrable);
TUBEWCP_DEFINE_ERROR(ExponentOutOfRange);
TUBEWCP_DEFINE_ERROR(MeshTooCoarse);

// pde / wcp
TUBEWCP_DEFINE_ERROR(InvalidTestFunction);
TUBEWCP_DEFINE_ERROR(NotCertified);
TUBEWCP_DEFINE_ERROR(MissingConstant);
TUBEWCP_DEFINE_ERROR(NoAdmissibleEps);

// cli
TUBEWCP_DEFINE_ERROR(ConfigError);

#undef TUBEWCP_DEFINE_ERROR

/// Nonlinear iteration failed to reach the requested residual.
class NoConvergence final : public Error {
public:
    NoConvergence(const std::string& msg, int iterations, std::vector<double> history)
        : Error(msg), iterations(iterations), residual_history(std::move(history)) {}

    int iterations = 0;
    std::vector<double> residual_history;
};

}  // namespace tubewcp
