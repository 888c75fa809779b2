#include "magnls/evolution.hpp"

#include "magnls/errors.hpp"

#include <cmath>
#include <numbers>

namespace magnls {

void EvolveConfig::validate() const {
    if (!(dt > 0.0)) throw PreconditionError("evolution.dt must be positive");
    if (dt > 0.1) throw PreconditionError("evolution.dt must not exceed 0.1");
    if (!(t_final >= dt)) throw PreconditionError("evolution.t_final must be at least dt");
    if (snapshot_stride < 1) throw PreconditionError("evolution.snapshot_stride must be >= 1");
    if (!(conserve_tol > 0.0)) throw PreconditionError("evolution.conserve_tol must be positive");
}

int EvolveConfig::steps() const { return int(std::llround(t_final / dt)); }

ComplexField crank_nicolson(const HamiltonianSpec& spec, const ComplexField& f, double dt,
                            double tol, int max_iter) {
    if (dt == 0.0) return f;
    // (1 + i tau H) = i tau (H - zeta) with zeta = i / tau, and the Cayley
    // transform is -1 + 2 (1 + i tau H)^-1.
    const double tau = 0.5 * dt;
    const cplx zeta(0.0, 1.0 / tau);
    const cplx itau(0.0, tau);
    SolverOptions opts;
    opts.tol_rel = tol;
    opts.max_iter = max_iter;
    const ComplexField guess = itau * f;
    ComplexField x = resolvent_solve(spec, zeta, f, opts, &guess);
    x *= 2.0 / itau;
    x -= f;
    return x;
}

ComplexField nonlinear_phase(const ComplexField& f, double t, Nonlinearity n) {
    const double s = sign_of(n);
    ComplexField out = f;
    for (auto& v : out.values()) v *= std::polar(1.0, -s * std::norm(v) * t);
    return out;
}

ComplexField step(const HamiltonianSpec& spec, const ComplexField& psi, double dt,
                  Nonlinearity n, double tol, int max_iter) {
    ComplexField u = nonlinear_phase(psi, 0.5 * dt, n);
    u = crank_nicolson(spec, u, dt, tol, max_iter);
    return nonlinear_phase(u, 0.5 * dt, n);
}

double energy(const HamiltonianSpec& spec, const ComplexField& psi, Nonlinearity n) {
    const double l4 = norm_lp(psi, 4.0);
    return inner_real(psi, spec.apply(psi)) + 0.5 * sign_of(n) * l4 * l4 * l4 * l4;
}

namespace {

double rel_drift(double v, double v0) {
    const double d = std::abs(v - v0);
    return v0 != 0.0 ? d / std::abs(v0) : d;
}

}  // namespace

Trajectory evolve(const HamiltonianSpec& spec, const ComplexField& psi0, const EvolveConfig& cfg) {
    cfg.validate();
    require_same_grid(spec.grid(), psi0.grid(), "evolve");
    const int nsteps = cfg.steps();
    Trajectory tr;

    auto energy_of = [&](const ComplexField& f) {
        return cfg.nonlinear ? energy(spec, f, cfg.nonlinearity) : inner_real(f, spec.apply(f));
    };
    auto record = [&](double t, const ComplexField& f) {
        tr.times.push_back(t);
        tr.snapshots.push_back(f);
        const double m = norm_l2(f);
        tr.mass.push_back(m * m);
        tr.energy.push_back(energy_of(f));
        tr.psi_h1.push_back(norm_h1(f));
        tr.max_energy_drift =
            std::max(tr.max_energy_drift, rel_drift(tr.energy.back(), tr.energy.front()));
    };

    ComplexField psi = psi0;
    record(0.0, psi);
    const double m0 = tr.mass.front();
    for (int k = 1; k <= nsteps; ++k) {
        psi = cfg.nonlinear
                  ? step(spec, psi, cfg.dt, cfg.nonlinearity, cfg.solve_tol, cfg.solve_max_iter)
                  : crank_nicolson(spec, psi, cfg.dt, cfg.solve_tol, cfg.solve_max_iter);
        const double m = norm_l2(psi);
        const double drift = rel_drift(m * m, m0);
        tr.max_mass_drift = std::max(tr.max_mass_drift, drift);
        if (drift > cfg.conserve_tol)
            throw ConservationBreach("mass drift " + std::to_string(drift) + " at step " +
                                     std::to_string(k) + " exceeds " +
                                     std::to_string(cfg.conserve_tol));
        if (k % cfg.snapshot_stride == 0 || k == nsteps) record(k * cfg.dt, psi);
    }
    tr.final_state = std::move(psi);
    return tr;
}

ComplexField linear_flow(const HamiltonianSpec& spec, const ComplexField& f, double t, double dt,
                         double tol) {
    if (!(dt > 0.0)) throw PreconditionError("linear_flow: dt must be positive");
    require_same_grid(spec.grid(), f.grid(), "linear_flow");
    if (t == 0.0) return f;
    const int n = std::max(1, int(std::ceil(std::abs(t) / dt - 1e-9)));
    const double h = t / n;
    ComplexField u = f;
    for (int k = 0; k < n; ++k) u = crank_nicolson(spec, u, h, tol);
    return u;
}

double wrap_around_time(const GridSpec& grid, double spread) {
    if (!(spread > 0.0)) throw PreconditionError("wrap_around_time: spread must be positive");
    const double L = grid.min_length();
    return L * L / (4.0 * std::numbers::pi * spread);
}

}  // namespace magnls
