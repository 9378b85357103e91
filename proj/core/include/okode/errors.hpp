#pragma once

#include <stdexcept>
#include <string>

namespace okode {

/// Bad inputs: malformed files, invalid configuration, broken preconditions.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failures: singular solves, diverging iterations, non-finite states.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integration left the finite range before reaching the end of the time grid.
class BlowUpError : public NumericalError {
public:
    BlowUpError(const std::string& what, double time_reached)
        : NumericalError(what), time_reached_(time_reached) {}

    double time_reached() const noexcept { return time_reached_; }

private:
    double time_reached_;
};

}  // namespace okode
