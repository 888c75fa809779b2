#pragma once

// Time stepping for i psi_t = H psi + g(psi): Strang splitting of the exact
// cubic phase rotation around a Crank-Nicolson step of the linear part.

#include "magnls/hamiltonian.hpp"
#include "magnls/nonlinearity.hpp"

#include <vector>

namespace magnls {

struct EvolveConfig {
    double dt = 1e-3;
    double t_final = 1.0;
    int snapshot_stride = 10;
    double conserve_tol = 1e-6;  ///< relative mass drift that aborts a run
    Nonlinearity nonlinearity = Nonlinearity::defocusing;
    bool nonlinear = true;
    /// GMRES tolerance of each Crank-Nicolson solve.
    double solve_tol = 1e-13;
    int solve_max_iter = 2000;

    /// Throws PreconditionError unless 0 < dt <= 0.1, t_final >= dt and
    /// snapshot_stride >= 1.
    void validate() const;
    int steps() const;
};

struct Trajectory {
    /// Times of the recorded frames (every snapshot_stride steps, plus the last).
    std::vector<double> times;
    std::vector<ComplexField> snapshots;
    std::vector<double> mass;
    std::vector<double> energy;
    std::vector<double> psi_h1;
    ComplexField final_state;
    double max_mass_drift = 0.0;  ///< over every step, relative
    double max_energy_drift = 0.0;  ///< over recorded frames, relative
};

/// (1 + i dt/2 H)^-1 (1 - i dt/2 H) f. dt may be negative.
ComplexField crank_nicolson(const HamiltonianSpec& spec, const ComplexField& f, double dt,
                            double tol = 1e-13, int max_iter = 2000);

/// f exp(-i sign |f|^2 t), the exact flow of i psi_t = g(psi).
ComplexField nonlinear_phase(const ComplexField& f, double t, Nonlinearity n);

/// One Strang step: half nonlinear phase, Crank-Nicolson, half phase.
ComplexField step(const HamiltonianSpec& spec, const ComplexField& psi, double dt,
                  Nonlinearity n, double tol = 1e-13, int max_iter = 2000);

/// <psi, H psi> + sign/2 ||psi||_4^4.
double energy(const HamiltonianSpec& spec, const ComplexField& psi, Nonlinearity n);

/// Repeated steps with mass monitoring; throws ConservationBreach once the
/// relative mass drift exceeds cfg.conserve_tol.
Trajectory evolve(const HamiltonianSpec& spec, const ComplexField& psi0, const EvolveConfig& cfg);

/// exp(-i t H) f by Crank-Nicolson steps of size at most dt; t may be negative.
ComplexField linear_flow(const HamiltonianSpec& spec, const ComplexField& f, double t,
                         double dt = 1e-3, double tol = 1e-13);

/// L_min^2 / (4 pi spread): horizon before radiation from a bump of the
/// given spatial spread re-enters through the periodic boundary.
double wrap_around_time(const GridSpec& grid, double spread);

}  // namespace magnls
