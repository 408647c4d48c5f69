#pragma once

#include <stdexcept>
#include <string>

namespace trimer {

// Invalid input: parameters outside the domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A coordinate chart was asked to represent a point it excludes.
class ChartBoundaryError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Classical integration left the w-chart (|w1|^2 + |w2|^2 too large, or the step size collapsed).
class ChartOverflowError : public std::runtime_error {
public:
    ChartOverflowError(double t, const std::string& what)
        : std::runtime_error(what + " (t = " + std::to_string(t) + ")"), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotAFixedPointError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace trimer
