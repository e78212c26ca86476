#pragma once

#include <stdexcept>
#include <string>

namespace schro {

// Base class for every failure mode of the library. Each concrete error
// corresponds to one precondition or runtime gate; callers that need to
// distinguish can catch the derived type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SCHRO_DEFINE_ERROR(Name)                                   \
    struct Name : Error {                                          \
        explicit Name(const std::string& msg) : Error(msg) {}      \
    }

SCHRO_DEFINE_ERROR(DegeneratePotential);   // two potential values coincide
SCHRO_DEFINE_ERROR(PeriodTooSmall);        // p < 2
SCHRO_DEFINE_ERROR(InvalidRadius);         // contour radius rho0 <= 1
SCHRO_DEFINE_ERROR(SublatticeOutOfRange);  // m outside 1..p
SCHRO_DEFINE_ERROR(ZeroHopping);           // alpha = 0 in rescaling
SCHRO_DEFINE_ERROR(ZeroCornerParameter);   // z = 0 in a Floquet matrix
SCHRO_DEFINE_ERROR(CouplingAboveThreshold); // lambda > lambda0, labeling undefined
SCHRO_DEFINE_ERROR(CouplingBelowThreshold); // mu < mu0 where mu >= mu0 required
SCHRO_DEFINE_ERROR(DegenerateBands);       // band gap below tolerance
SCHRO_DEFINE_ERROR(RootFindingDivergence); // simultaneous iteration failed
SCHRO_DEFINE_ERROR(AmbiguousLabeling);     // root not within gamma/4 of exactly one V_l
SCHRO_DEFINE_ERROR(LengthMismatch);        // Jacobi spec with |b| != p-1
SCHRO_DEFINE_ERROR(DomainViolation);       // argument outside the stated domain
SCHRO_DEFINE_ERROR(QuadratureUnresolved);  // doubling M still moves the result
SCHRO_DEFINE_ERROR(BoundarySpill);         // amplitude reached the truncation edge
SCHRO_DEFINE_ERROR(MethodUnavailable);     // method guard (e.g. eig beyond size cap)
SCHRO_DEFINE_ERROR(ThresholdNeverCrossed); // no d with ||K|| >= eps
SCHRO_DEFINE_ERROR(InsufficientSamples);   // too few points past the transient
SCHRO_DEFINE_ERROR(NotConverged);          // direct velocity still drifting

#undef SCHRO_DEFINE_ERROR

} // namespace schro
