#include "magnls/hamiltonian.hpp"

#include "magnls/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magnls {

HamiltonianSpec::HamiltonianSpec(PotentialPair potentials, double c_pos, std::optional<double> K)
    : potentials_(std::move(potentials)), c_pos_(c_pos) {
    const auto& g = grid();
    magnetic_ = potentials_.A.max_abs() > 0.0;
    K_ = K.value_or(k_rule_bound());
    if (!(K_ >= 0.0)) throw PreconditionError("H1 shift K must be non-negative");

    lower_bound_ = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g.total(); ++j) {
        double a2 = 0.0;
        for (const auto& c : potentials_.A.components) a2 += c[j].real() * c[j].real();
        lower_bound_ = std::min(lower_bound_, potentials_.V[j].real() - a2);
    }

    k2_.resize(g.total());
    k_odd_.assign(std::size_t(g.dim()), std::vector<double>(g.total()));
    for (std::size_t j = 0; j < g.total(); ++j) {
        const auto idx = g.unflatten(j);
        double s = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double k = g.wavenumber(a, idx[a]);
            s += k * k;
            k_odd_[std::size_t(a)][j] = idx[a] == g.size(a) / 2 ? 0.0 : k;
        }
        k2_[j] = s;
    }
}

double HamiltonianSpec::k_rule_bound() const noexcept {
    return potentials_.V.max_abs() + potentials_.div_A.max_abs() + c_pos_ + 1.0;
}

ComplexField HamiltonianSpec::apply(const ComplexField& f, double shift) const {
    require_same_grid(grid(), f.grid(), "apply_H");
    const auto& g = grid();
    const std::size_t n = g.total();
    const double scale = 1.0 / double(n);

    ComplexField fhat = f;
    detail::fft_forward(g, fhat.values());

    ComplexField out_hat(g);
    for (std::size_t j = 0; j < n; ++j) out_hat[j] = k2_[j] * fhat[j];

    ComplexField local(g);  // A . grad f in physical space
    if (magnetic_) {
        for (int a = 0; a < g.dim(); ++a) {
            const auto& k = k_odd_[std::size_t(a)];
            const auto& Aa = potentials_.A[a];
            ComplexField d(g);
            for (std::size_t j = 0; j < n; ++j) d[j] = cplx(0.0, k[j] * scale) * fhat[j];
            detail::fft_inverse(g, d.values());
            ComplexField af(g);
            for (std::size_t j = 0; j < n; ++j) {
                local[j] += Aa[j].real() * d[j];
                af[j] = Aa[j].real() * f[j];
            }
            detail::fft_forward(g, af.values());
            // i d_a (A_a f) has symbol i (i k_a) = -k_a.
            for (std::size_t j = 0; j < n; ++j) out_hat[j] -= k[j] * af[j];
        }
    }
    for (std::size_t j = 0; j < n; ++j) out_hat[j] *= scale;
    detail::fft_inverse(g, out_hat.values());

    const auto& V = potentials_.V;
    for (std::size_t j = 0; j < n; ++j)
        out_hat[j] += cplx(0.0, 1.0) * local[j] + (V[j].real() + shift) * f[j];
    return out_hat;
}

ComplexField apply_H(const HamiltonianSpec& spec, const ComplexField& f) { return spec.apply(f); }

ComplexField apply_H1(const HamiltonianSpec& spec, const ComplexField& f) {
    return spec.apply(f, spec.K());
}

HamiltonianSpec gauge_transform(const HamiltonianSpec& spec, const ComplexField& chi) {
    const auto& p = spec.potentials();
    require_same_grid(p.grid(), chi.grid(), "gauge_transform");
    VectorField A_new = p.A + build_gauge_field(chi);
    ComplexField V_new = p.V;
    for (std::size_t j = 0; j < V_new.size(); ++j) {
        double old2 = 0.0, new2 = 0.0;
        for (int a = 0; a < A_new.dim(); ++a) {
            old2 += std::norm(p.A[a][j]);
            new2 += std::norm(A_new[a][j]);
        }
        V_new[j] += new2 - old2;
    }
    return HamiltonianSpec(PotentialPair::make(std::move(A_new), std::move(V_new), p.decay_eps,
                                               p.lq_exponent),
                           spec.c_pos(), spec.K());
}

KrylovResult resolvent_solve_detailed(const HamiltonianSpec& spec, cplx zeta,
                                      const ComplexField& f, const SolverOptions& opts,
                                      const ComplexField* guess) {
    if (!(std::abs(zeta.imag()) >= 1e-8))
        throw PreconditionError("resolvent_solve needs |Im zeta| >= 1e-8");
    require_same_grid(spec.grid(), f.grid(), "resolvent_solve");
    LinearOp op = [&](const ComplexField& u) {
        ComplexField out = spec.apply(u);
        out.axpy(-zeta, u);
        return out;
    };
    LinearOp precond = [&](const ComplexField& u) {
        return spec.apply_k2_multiplier(u, [zeta](double k2) { return 1.0 / (k2 - zeta); });
    };
    return gmres(op, precond, f, guess, opts.tol_rel, opts.max_iter);
}

ComplexField resolvent_solve(const HamiltonianSpec& spec, cplx zeta, const ComplexField& f,
                             const SolverOptions& opts, const ComplexField* guess) {
    auto res = resolvent_solve_detailed(spec, zeta, f, opts, guess);
    if (!res.converged)
        throw NonConvergence("resolvent solve at zeta = (" + std::to_string(zeta.real()) + ", " +
                                 std::to_string(zeta.imag()) + ")",
                             res.rel_residual, res.iterations);
    return std::move(res.x);
}

KrylovResult shifted_solve_detailed(const HamiltonianSpec& spec, double shift,
                                    const ComplexField& f, double tol, int max_iter,
                                    const ComplexField* guess) {
    LinearOp op = [&](const ComplexField& u) { return spec.apply(u, -shift); };
    const double m = std::max(1.0, -shift);
    LinearOp precond = [&](const ComplexField& u) {
        return spec.apply_k2_multiplier(u, [m](double k2) { return 1.0 / (k2 + m); });
    };
    return pcg(op, precond, f, guess, tol, max_iter);
}

ComplexField shifted_solve(const HamiltonianSpec& spec, double shift, const ComplexField& f,
                           double tol, int max_iter, const ComplexField* guess) {
    auto res = shifted_solve_detailed(spec, shift, f, tol, max_iter, guess);
    if (!res.converged) throw NonConvergence("shifted solve", res.rel_residual, res.iterations);
    return std::move(res.x);
}

ComplexField project_continuous(const HamiltonianSpec& spec, const EigenPair& eig,
                                const ComplexField& f) {
    require_same_grid(spec.grid(), f.grid(), "project_continuous");
    require_same_grid(eig.phi0.grid(), f.grid(), "project_continuous");
    ComplexField out = f;
    out.axpy(-inner_l2(eig.phi0, f), eig.phi0);
    return out;
}

ComplexField deflated_solve(const HamiltonianSpec& spec, const EigenPair& eig,
                            const ComplexField& f, double tol, int max_iter,
                            const ComplexField* guess) {
    const ComplexField rhs = project_continuous(spec, eig, f);
    LinearOp op = [&](const ComplexField& u) {
        const cplx c = inner_l2(eig.phi0, u);
        ComplexField pu = u;
        pu.axpy(-c, eig.phi0);
        ComplexField out = project_continuous(spec, eig, spec.apply(pu, -eig.e0));
        out.axpy(c, eig.phi0);
        return out;
    };
    const double m = std::max(-eig.e0, 1e-3);
    LinearOp precond = [&](const ComplexField& u) {
        return spec.apply_k2_multiplier(u, [m](double k2) { return 1.0 / (k2 + m); });
    };
    ComplexField start;
    if (guess) start = project_continuous(spec, eig, *guess);
    auto res = pcg(op, precond, rhs, guess ? &start : nullptr, tol, max_iter);
    if (!res.converged) throw NonConvergence("deflated solve", res.rel_residual, res.iterations);
    return project_continuous(spec, eig, res.x);
}

}  // namespace magnls
