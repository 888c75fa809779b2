#pragma once

#include <stdexcept>
#include <string>

namespace magnls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched grids, wrong sizes, malformed snapshots.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated by its inputs.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Numerical failure. The CLI maps every SolverError to exit status 2.
class SolverError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public SolverError {
public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : SolverError(what + " (residual " + std::to_string(residual) + " after " +
                      std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

class NoBoundState : public SolverError {
public:
    explicit NoBoundState(double lowest)
        : SolverError("no bound state: lowest eigenvalue " + std::to_string(lowest) +
                      " is not negative"),
          lowest_(lowest) {}

    double lowest() const noexcept { return lowest_; }

private:
    double lowest_;
};

class ContractionSetViolation : public SolverError {
public:
    using SolverError::SolverError;
};

class ConservationBreach : public SolverError {
public:
    using SolverError::SolverError;
};

class NewtonDivergence : public SolverError {
public:
    using SolverError::SolverError;
};

class InsufficientDecayWindow : public SolverError {
public:
    using SolverError::SolverError;
};

}  // namespace magnls
