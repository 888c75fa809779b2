#pragma once

// Best decomposition psi = Q[z] + eta with <i eta, D_j Q[z]> = 0, tracking
// of z(t), eta(t) along a trajectory, modulation residual and scattering
// diagnostics.

#include "magnls/analysis.hpp"
#include "magnls/bound_states.hpp"
#include "magnls/evolution.hpp"

#include <array>
#include <optional>
#include <vector>

namespace magnls {

struct DecomposeOptions {
    BoundStateOptions bound;
    /// Bound on ||psi||_H1; <= 0 selects 0.3 z_max.
    double delta_decomp = 0.0;
    int max_newton = 50;
    double sigma = 4.1;
};

struct DecompositionRecord {
    double t = 0.0;
    cplx z;
    ComplexField eta;
    double E = 0.0;
    double ortho_resid = 0.0;  ///< max_j |<i eta, D_j Q[z]>|
    double eta_l2 = 0.0;
    double eta_h1 = 0.0;
    double eta_weighted_h1 = 0.0;
    double eta_Q_pairing = 0.0;  ///< <eta, Q[z]>
    double Q_l2 = 0.0;
    int newton_iters = 0;
};

/// B_j(z) = <i (psi - Q[z]), D_j Q[z]> with D_j Q from derivative_fields.
std::array<double, 2> symplectic_residual(const HamiltonianSpec& spec, const EigenPair& eig,
                                          const ComplexField& psi, cplx z,
                                          const BoundStateOptions& opts = {});

/// Newton iteration on B(z) = 0 with a forward-difference Jacobian, started
/// at z_guess or at the cold start (phi0, psi). Converged once
/// |B| <= 1e-12 (1 + ||psi||_2); a few extra steps are taken while |B|
/// keeps falling. Throws NewtonDivergence after max_newton iterations and
/// PreconditionError when ||psi||_H1 exceeds delta_decomp.
DecompositionRecord decompose(const HamiltonianSpec& spec, const EigenPair& eig,
                              const ComplexField& psi, std::optional<cplx> z_guess = std::nullopt,
                              const DecomposeOptions& opts = {});

/// ||exp(i t2 H) eta2 - exp(i t1 H) eta1||_H1 via linear_flow with negated times.
double scattering_gap(const HamiltonianSpec& spec, const ComplexField& eta_t1, double t1,
                      const ComplexField& eta_t2, double t2, double dt = 1e-3);

struct StabilityReport {
    std::vector<double> times;
    std::vector<cplx> z;
    std::vector<double> E;
    /// z(t) exp(i int_0^t E ds), trapezoid quadrature.
    std::vector<cplx> adjusted;
    /// |z' + i E z| = |d/dt adjusted| by centered differences.
    std::vector<double> mod_resid;
    std::vector<double> ortho_resid;
    std::vector<double> eta_l2;
    std::vector<double> eta_h1;
    std::vector<double> eta_weighted_h1;
    std::vector<double> eta_Q_pairing;
    std::vector<double> Q_l2;
    std::vector<int> newton_iters;
    double L1_mod_resid = 0.0;
    double x_weighted_l2 = 0.0;
    double x_strichartz = 0.0;
    double x_sup_h1 = 0.0;
    double x_norm = 0.0;
    /// Total variation of the adjusted series over the first and second
    /// halves of the window.
    double adjusted_tv_first = 0.0;
    double adjusted_tv_second = 0.0;
    /// Checkpoint times (0.25, 0.5, 0.75, 1) T and the Cauchy gaps between
    /// consecutive checkpoints.
    std::vector<double> checkpoints;
    std::vector<double> scattering_gaps;
    /// exp(i T H) eta(T), an estimate of the scattering state.
    ComplexField eta_plus;
    /// <D_j Q, i D_k Q> at the first frame.
    std::array<std::array<double, 2>, 2> gram{};
    bool truncated = false;
    int failure_frame = -1;
};

struct TrackOptions {
    DecomposeOptions decompose;
    /// Time step of the linear pullbacks used for the scattering gaps.
    double pullback_dt = 1e-3;
};

/// Warm-started decomposition of every recorded frame. Requires frame
/// spacing <= 0.1. A NewtonDivergence truncates the report at that frame.
StabilityReport track(const HamiltonianSpec& spec, const EigenPair& eig, const Trajectory& traj,
                      const TrackOptions& opts = {});

}  // namespace magnls
