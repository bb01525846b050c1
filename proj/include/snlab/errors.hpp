#ifndef SNLAB_ERRORS_HPP
#define SNLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace snlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A field contains NaN/Inf or is empty.
struct InvalidFieldError : Error { using Error::Error; };

// Mismatched grids / component counts.
struct ShapeError : Error { using Error::Error; };

// Point outside a non-periodic grid domain.
struct OutOfDomainError : Error { using Error::Error; };

// A group-element invariant failed; the message names the violated identity.
struct ConstraintViolation : Error { using Error::Error; };

// ft + g == 0 in a projective map.
struct ProjectiveSingularityError : Error { using Error::Error; };

// phi' vanished in a time reparametrization.
struct SingularReparamError : Error { using Error::Error; };

// Finite-difference stencil would leave the stored sample range.
struct StencilError : Error { using Error::Error; };

// Poisson kernel requested for d <= 2.
struct UnsupportedDimensionError : Error { using Error::Error; };

// Bad run configuration (scheme/omega mismatch, missing fields, ...).
struct ConfigError : Error { using Error::Error; };

// Iterative solve failed to converge; message carries the iteration report.
struct SolverError : Error { using Error::Error; };

} // namespace snlab

#endif
