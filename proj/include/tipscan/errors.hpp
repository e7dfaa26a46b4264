#pragma once

#include <stdexcept>
#include <string>

namespace tipscan {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario/config level failures (unknown ids, malformed files).
class ScenarioError : public Error {
public:
    using Error::Error;
};

/// Numerical failures: overflow, divergence of a solver, lost branches.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NumericalOverflow : public NumericalError {
public:
    NumericalOverflow(long index, const std::string& what)
        : NumericalError("non-finite value at index " + std::to_string(index) + ": " + what),
          index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

class UnsupportedDimension : public Error {
public:
    explicit UnsupportedDimension(long dim)
        : Error("unsupported dimension " + std::to_string(dim)), dim_(dim) {}
    long dimension() const noexcept { return dim_; }

private:
    long dim_;
};

class NewtonDivergence : public NumericalError {
public:
    NewtonDivergence(double s, const std::string& what)
        : NumericalError("Newton did not converge at s=" + std::to_string(s) + ": " + what), s_(s) {}
    double s() const noexcept { return s_; }

private:
    double s_;
};

class BranchJump : public NumericalError {
public:
    BranchJump(double s, double jump, double bound)
        : NumericalError("branch jump at s=" + std::to_string(s) + " (|dX|=" + std::to_string(jump) +
                         " > " + std::to_string(bound) + ")"),
          s_(s) {}
    double s() const noexcept { return s_; }

private:
    double s_;
};

class SeedNotWashingOut : public NumericalError {
public:
    SeedNotWashingOut(double r, long n_start)
        : NumericalError("seed perturbation did not wash out at r=" + std::to_string(r) +
                         " (deepest n_start=" + std::to_string(n_start) + ")") {}
};

class InvalidBracket : public Error {
public:
    using Error::Error;
};

class SameLabel : public Error {
public:
    using Error::Error;
};

class InvalidWindow : public Error {
public:
    using Error::Error;
};

class UnknownScenario : public ScenarioError {
public:
    explicit UnknownScenario(const std::string& id) : ScenarioError("unknown scenario '" + id + "'") {}
};

}  // namespace tipscan
