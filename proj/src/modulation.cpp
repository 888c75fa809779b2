#include "magnls/modulation.hpp"

#include "magnls/errors.hpp"

#include <cmath>

namespace magnls {

namespace {

struct Eval {
    DerivativeFields d;
    std::array<double, 2> B{0.0, 0.0};
    double size() const { return std::hypot(B[0], B[1]); }
};

Eval evaluate(const HamiltonianSpec& spec, const EigenPair& eig, const ComplexField& psi, cplx z,
              const BoundStateOptions& opts) {
    Eval ev;
    ev.d = derivative_fields(spec, eig, z, opts);
    const ComplexField ieta = cplx(0.0, 1.0) * (psi - ev.d.state.Q);
    ev.B = {inner_real(ieta, ev.d.D1Q), inner_real(ieta, ev.d.D2Q)};
    return ev;
}

}  // namespace

std::array<double, 2> symplectic_residual(const HamiltonianSpec& spec, const EigenPair& eig,
                                          const ComplexField& psi, cplx z,
                                          const BoundStateOptions& opts) {
    return evaluate(spec, eig, psi, z, opts).B;
}

DecompositionRecord decompose(const HamiltonianSpec& spec, const EigenPair& eig,
                              const ComplexField& psi, std::optional<cplx> z_guess,
                              const DecomposeOptions& opts) {
    require_same_grid(spec.grid(), psi.grid(), "decompose");
    const double zmax = opts.bound.z_max > 0.0 ? opts.bound.z_max : default_z_max(eig);
    const double delta = opts.delta_decomp > 0.0 ? opts.delta_decomp : 0.3 * zmax;
    const double psi_h1 = norm_h1(psi);
    if (psi_h1 > delta)
        throw PreconditionError("decompose: ||psi||_H1 = " + std::to_string(psi_h1) +
                                " exceeds the small-data bound " + std::to_string(delta));

    cplx z = z_guess ? *z_guess : inner_l2(eig.phi0, psi);
    const double tol = 1e-12 * (1.0 + norm_l2(psi));
    Eval ev = evaluate(spec, eig, psi, z, opts.bound);
    int iters = 0;
    int extra = 0;
    while (true) {
        const double b = ev.size();
        if (b <= tol && (b == 0.0 || extra >= 3)) break;
        if (iters >= opts.max_newton)
            throw NewtonDivergence("decompose: |B| = " + std::to_string(b) + " after " +
                                   std::to_string(iters) + " Newton iterations");
        const double h = 1e-6 * std::max(std::abs(z), 0.01);
        const Eval e1 = evaluate(spec, eig, psi, z + h, opts.bound);
        const Eval e2 = evaluate(spec, eig, psi, z + cplx(0.0, h), opts.bound);
        const double j11 = (e1.B[0] - ev.B[0]) / h, j12 = (e2.B[0] - ev.B[0]) / h;
        const double j21 = (e1.B[1] - ev.B[1]) / h, j22 = (e2.B[1] - ev.B[1]) / h;
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det))
            throw NewtonDivergence("decompose: singular Jacobian");
        const double dx = -(j22 * ev.B[0] - j12 * ev.B[1]) / det;
        const double dy = -(-j21 * ev.B[0] + j11 * ev.B[1]) / det;
        const cplx z_new = z + cplx(dx, dy);
        if (std::abs(z_new) + 1e-4 * std::max(std::abs(z_new), 0.01) > zmax)
            throw NewtonDivergence("decompose: Newton left the bound-state domain");
        Eval next = evaluate(spec, eig, psi, z_new, opts.bound);
        ++iters;
        if (b <= tol) {
            // polishing below the tolerance: keep only genuine improvements
            if (next.size() >= 0.25 * b) break;
            ++extra;
        }
        z = z_new;
        ev = std::move(next);
    }

    DecompositionRecord rec;
    rec.z = z;
    rec.E = ev.d.state.E;
    rec.eta = psi - ev.d.state.Q;
    rec.ortho_resid = std::max(std::abs(ev.B[0]), std::abs(ev.B[1]));
    rec.eta_l2 = norm_l2(rec.eta);
    rec.eta_h1 = norm_h1(rec.eta);
    rec.eta_weighted_h1 = norm_weighted_h1(rec.eta, opts.sigma);
    rec.eta_Q_pairing = inner_real(rec.eta, ev.d.state.Q);
    rec.Q_l2 = norm_l2(ev.d.state.Q);
    rec.newton_iters = iters;
    return rec;
}

double scattering_gap(const HamiltonianSpec& spec, const ComplexField& eta_t1, double t1,
                      const ComplexField& eta_t2, double t2, double dt) {
    if (!(t2 > t1) || t1 < 0.0) throw PreconditionError("scattering_gap: need t2 > t1 >= 0");
    const ComplexField a = linear_flow(spec, eta_t1, -t1, dt);
    const ComplexField b = linear_flow(spec, eta_t2, -t2, dt);
    return norm_h1(b - a);
}

namespace {

std::size_t nearest_frame(const std::vector<double>& times, double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return best;
}

}  // namespace

StabilityReport track(const HamiltonianSpec& spec, const EigenPair& eig, const Trajectory& traj,
                      const TrackOptions& opts) {
    const auto& times = traj.times;
    if (times.size() < 3) throw PreconditionError("track: need at least three frames");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] > 0.1 + 1e-12)
            throw PreconditionError("track: frame spacing exceeds 0.1");

    StabilityReport rep;
    XNormAccumulator xacc(opts.decompose.sigma);
    const double T = times.back();
    for (double f : {0.25, 0.5, 0.75, 1.0}) rep.checkpoints.push_back(f * T);
    std::vector<std::size_t> cp_frames;
    for (double t : rep.checkpoints) cp_frames.push_back(nearest_frame(times, t));
    std::vector<ComplexField> cp_eta(cp_frames.size());

    std::optional<cplx> guess;
    for (std::size_t i = 0; i < times.size(); ++i) {
        DecompositionRecord rec;
        try {
            rec = decompose(spec, eig, traj.snapshots[i], guess, opts.decompose);
        } catch (const NewtonDivergence&) {
            rep.truncated = true;
            rep.failure_frame = int(i);
            break;
        }
        rec.t = times[i];
        if (i == 0) {
            const auto d = derivative_fields(spec, eig, rec.z, opts.decompose.bound);
            const ComplexField* D[2] = {&d.D1Q, &d.D2Q};
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    rep.gram[j][k] = inner_real(*D[j], cplx(0.0, 1.0) * *D[k]);
        }
        rep.times.push_back(rec.t);
        rep.z.push_back(rec.z);
        rep.E.push_back(rec.E);
        rep.ortho_resid.push_back(rec.ortho_resid);
        rep.eta_l2.push_back(rec.eta_l2);
        rep.eta_h1.push_back(rec.eta_h1);
        rep.eta_weighted_h1.push_back(rec.eta_weighted_h1);
        rep.eta_Q_pairing.push_back(rec.eta_Q_pairing);
        rep.Q_l2.push_back(rec.Q_l2);
        rep.newton_iters.push_back(rec.newton_iters);
        xacc.add_values(rec.t, rec.eta_weighted_h1, norm_w1p(rec.eta, 18.0 / 5.0), rec.eta_h1);
        for (std::size_t c = 0; c < cp_frames.size(); ++c)
            if (cp_frames[c] == i) cp_eta[c] = rec.eta;
        // next guess: rotate by the standing-wave phase
        const double dt_next = i + 1 < times.size() ? times[i + 1] - times[i] : 0.0;
        guess = rec.z * std::polar(1.0, -rec.E * dt_next);
    }

    const std::size_t n = rep.times.size();
    double theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) theta += 0.5 * (rep.times[i] - rep.times[i - 1]) * (rep.E[i] + rep.E[i - 1]);
        rep.adjusted.push_back(rep.z[i] * std::polar(1.0, theta));
    }
    rep.mod_resid.assign(n, 0.0);
    if (n >= 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1;
            const std::size_t b = i + 1 == n ? n - 1 : i + 1;
            rep.mod_resid[i] =
                std::abs(rep.adjusted[b] - rep.adjusted[a]) / (rep.times[b] - rep.times[a]);
        }
        for (std::size_t i = 1; i < n; ++i)
            rep.L1_mod_resid +=
                0.5 * (rep.times[i] - rep.times[i - 1]) * (rep.mod_resid[i] + rep.mod_resid[i - 1]);
        const double mid = 0.5 * (rep.times.front() + rep.times.back());
        for (std::size_t i = 1; i < n; ++i) {
            const double dv = std::abs(rep.adjusted[i] - rep.adjusted[i - 1]);
            (rep.times[i] <= mid ? rep.adjusted_tv_first : rep.adjusted_tv_second) += dv;
        }
    }
    rep.x_weighted_l2 = xacc.weighted_l2();
    rep.x_strichartz = xacc.strichartz_l3();
    rep.x_sup_h1 = xacc.sup_h1();
    rep.x_norm = xacc.total();

    if (!rep.truncated) {
        std::vector<ComplexField> pulled;
        for (std::size_t c = 0; c < cp_frames.size(); ++c)
            pulled.push_back(linear_flow(spec, cp_eta[c], -times[cp_frames[c]], opts.pullback_dt));
        for (std::size_t c = 1; c < pulled.size(); ++c)
            rep.scattering_gaps.push_back(norm_h1(pulled[c] - pulled[c - 1]));
        rep.eta_plus = pulled.back();
    }
    return rep;
}

}  // namespace magnls
