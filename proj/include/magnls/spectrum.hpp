#pragma once

#include "magnls/hamiltonian.hpp"

#include <vector>

namespace magnls {

struct EigenOptions {
    int max_iter = 400;
    double residual_tol = 1e-11;   ///< target; 1e-9 is the hard requirement
    double eigenvalue_tol = 1e-12;
    double solve_tol = 1e-13;
    unsigned long long seed = 0x5eed;
};

struct SpectrumLine {
    double eigenvalue = 0.0;
    double residual = 0.0;
};

struct SpectrumScan {
    std::vector<SpectrumLine> lines;
    int negative_count = 0;
    /// True iff exactly one eigenvalue lies below -gap_tol.
    bool single_bound_state = false;
};

/// Lowest `count` eigenpairs of the discrete H by block shift-invert
/// subspace iteration with Rayleigh-Ritz; count + 2 vectors are iterated.
/// Returns eigenvalues ascending with unit-norm eigenvectors.
struct EigenBlock {
    std::vector<double> values;
    std::vector<ComplexField> vectors;
    std::vector<double> residuals;
    int iterations = 0;
};
EigenBlock lowest_eigenpairs(const HamiltonianSpec& spec, int count, const EigenOptions& opts = {});

/// Ground state (e0, phi0), phase-fixed so that the sample of largest
/// modulus is real positive (phi0 is then real and positive when A = 0).
/// Throws NoBoundState if e0 >= -1e-10 and NonConvergence if the residual
/// stays above 1e-9.
EigenPair ground_state(const HamiltonianSpec& spec, const EigenOptions& opts = {});

/// Lowest `count` (<= 8) eigenvalues and residuals and the single-bound-state
/// verdict.
SpectrumScan low_spectrum_scan(const HamiltonianSpec& spec, int count, double gap_tol = 1e-6,
                               const EigenOptions& opts = {});

/// Multiplies by the unit phase that makes the largest-modulus sample real
/// positive.
ComplexField fix_phase(const ComplexField& f);

}  // namespace magnls
