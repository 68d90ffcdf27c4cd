#pragma once

#include <stdexcept>
#include <string>

namespace cbfqp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// QP has no primal-feasible candidate (e.g. a hard row with zero coefficients
// and positive right-hand side).
struct QpInfeasibleError : Error {
    using Error::Error;
};

// Every KKT subsystem that could certify a solution was singular.
struct QpDegenerateError : Error {
    using Error::Error;
};

// Jacobian requested at a point where the vector field is not differentiable.
struct SingularityError : Error {
    using Error::Error;
};

// Polar retraction failed: input too far from the orthogonal group, or its
// polar factor is a reflection.
struct RetractionError : Error {
    using Error::Error;
};

// Stability test invoked off the obstacle boundary.
struct NotBoundaryPointError : Error {
    using Error::Error;
};

// Boundary equilibrium search needs a parametrizable (circular) boundary.
struct UnsupportedBoundaryError : Error {
    using Error::Error;
};

// Scenario file / configuration problems. Message carries file:line context.
struct ConfigError : Error {
    using Error::Error;
};

// Simulation aborted (infeasible QP, NaN state, unsafe start, ...).
struct SimError : Error {
    using Error::Error;
};

}  // namespace cbfqp
