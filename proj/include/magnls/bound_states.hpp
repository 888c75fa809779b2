#pragma once

// Small nonlinear bound states Q[z] = z phi0 + q(z), E[z] = e0 + e'(z)
// solving H Q + g(Q) = E Q, built as the fixed point of
//   e'_1 = Re((phi0, g0) conj z) / |z|^2,   g0 = g(z phi0 + q_0),
//   q_1  = H0^-1 (-P_c g0 + e'_0 q_0),      H0 = H - e0 on Range(P_c).

#include "magnls/hamiltonian.hpp"
#include "magnls/nonlinearity.hpp"

#include <vector>

namespace magnls {

struct BoundStateOptions {
    Nonlinearity nonlinearity = Nonlinearity::defocusing;
    double tol = 1e-12;  ///< on ||q_{k+1} - q_k||_{H2} + |e'_{k+1} - e'_k|, scaled by 1 + |z|
    int max_iter = 200;
    double solve_tol = 1e-11;
    int solve_max_iter = 4000;
    /// Upper bound on |z|; <= 0 selects default_z_max().
    double z_max = 0.0;
};

struct BoundState {
    cplx z;
    ComplexField Q;
    ComplexField q;
    double E = 0.0;
    double e_prime = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::defocusing;
    int iterations = 0;
    double residual = 0.0;  ///< ||H Q + g(Q) - E Q||_2
    /// ||q_{k+1} - q_k||_{H2} per iteration, for contraction diagnostics.
    std::vector<double> step_norms;
};

struct DerivativeFields {
    BoundState state;  ///< the bound state at z itself
    ComplexField D1Q;  ///< dQ/dRe z
    ComplexField D2Q;  ///< dQ/dIm z
    std::array<double, 2> DE{0.0, 0.0};
    double step = 0.0;
    /// ||D1Q (-Im z) + D2Q Re z - i Q||_2, the discretized DQ[z] iz = iQ[z].
    double rotation_residual = 0.0;
};

struct DecayFit {
    double beta = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    double r2 = 0.0;
    double sup_weighted = 0.0;  ///< max of exp(beta |x|) |Q| over the window
    int samples = 0;
};

/// 0.2 (||phi0||_4^4)^(-1/2).
double default_z_max(const EigenPair& eig);

struct FixedPointIterate {
    ComplexField q;
    double e_prime = 0.0;
};

/// One application of the contraction map. Throws ContractionSetViolation
/// when ||q1||_{H2} > |z|^2 and PreconditionError when |z| > z_max.
FixedPointIterate fixed_point_step(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                                   const ComplexField& q0, double e0_prime,
                                   const BoundStateOptions& opts = {});

/// Iterates fixed_point_step from (0, 0). `warm` optionally seeds the
/// iteration with a nearby state (rotated by the phase of z / warm->z).
BoundState solve_bound_state(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                             const BoundStateOptions& opts = {}, const BoundState* warm = nullptr);

/// Central differences of solve_bound_state in Re z and Im z with step
/// 1e-4 max(|z|, 0.01) unless `step` > 0.
DerivativeFields derivative_fields(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                                   const BoundStateOptions& opts = {}, double step = 0.0);

/// Least-squares fit of log|Q| against |x| over 0.25 L/2 <= |x| <= 0.45 L/2,
/// ignoring samples below 1e-13. Throws InsufficientDecayWindow when fewer
/// than 8 samples survive.
DecayFit decay_fit(const BoundState& state);
DecayFit decay_fit(const ComplexField& Q);

/// ||H Q + g(Q) - E Q||_2.
double nonlinear_residual(const HamiltonianSpec& spec, const ComplexField& Q, double E,
                          Nonlinearity n);

}  // namespace magnls
