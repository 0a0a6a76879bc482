#pragma once

#include <stdexcept>
#include <string>

namespace propkit {

// Raised when a request or argument violates a documented precondition
// (bad field configuration, degenerate endpoints, malformed profile data).
// The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an algorithm cannot reach its accuracy contract or hits a
// genuine singularity (caustic, resonant eigenvalue, non-convergent
// quadrature). The CLI maps this to exit code 3.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace propkit
