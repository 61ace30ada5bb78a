/** \file errors.hpp
    Exception taxonomy shared by all modules.

    Every throwing precondition in the library maps to one of these types so
    callers (and the verification harness) can distinguish structural misuse
    (descriptor mismatch, corner violation) from geometric failure (a point
    leaving a chart domain, a logarithm hitting the branch cut).
*/
#pragma once

#include <stdexcept>
#include <string>

namespace bgl {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two elements built over different algebra descriptors were combined.
struct DescriptorError : Error { using Error::Error; };

/// A requested rank vector exceeds the block dimensions.
struct RankError : Error { using Error::Error; };

/// An element handed to a projection-typed slot fails p*=p or p^2=p.
struct ProjectionError : Error { using Error::Error; };

/// A stated corner membership (e.g. y ∈ (1-p)Mp) fails beyond tolerance.
struct CornerError : Error { using Error::Error; };

/// Groupoid composition attempted with mismatched source/target supports.
struct NonComposable : Error { using Error::Error; };

/// A point does not lie in the domain of the requested chart.
struct NotInChart : Error { using Error::Error; };

/// Two tangent-type objects anchored at different base points were combined.
struct BaseMismatch : Error { using Error::Error; };

/// A pairing matrix required to be invertible is numerically singular.
struct DegeneratePairing : Error { using Error::Error; };

/// Admissible sample tuples could not be generated for a property check.
struct SamplingError : Error { using Error::Error; };

/// Invalid harness configuration.
struct ConfigError : Error { using Error::Error; };

/// Unknown fixture generator name.
struct UnknownGenerator : Error { using Error::Error; };

/// Unknown check identifier.
struct UnknownCheck : Error { using Error::Error; };

/// An observable was evaluated on an environment missing one of its variables.
struct UnknownVariable : Error { using Error::Error; };

/// An observable failed a required symmetry (gauge-invariance) probe.
struct InvarianceViolation : Error { using Error::Error; };

/// Matrix logarithm requested for a spectrum touching the principal cut.
struct LogBranchError : Error { using Error::Error; };

} // namespace bgl
