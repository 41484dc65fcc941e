#pragma once

#include <stdexcept>
#include <string>

namespace firmmfg {

// Inputs outside an operation's admissible set (q <= 0, prices <= 0,
// targets below a branch minimum, out-of-span capital, ...).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative procedure exhausted its budget or failed a convergence check.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// The inner market minimizer landed on the price-box boundary, so the
// scenario violates the interiority assumption it was configured with.
class BoxViolationError : public ConvergenceError {
public:
    explicit BoxViolationError(const std::string& what) : ConvergenceError(what) {}
};

// Scenario files / overrides that do not parse or fail invariant checks.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A state that the construction rules out; reaching it signals a solver bug.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace firmmfg
