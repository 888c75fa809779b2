#include "magnls/bound_states.hpp"

#include "magnls/errors.hpp"

#include <cmath>

namespace magnls {

namespace {

double z_limit(const EigenPair& eig, const BoundStateOptions& opts) {
    return opts.z_max > 0.0 ? opts.z_max : default_z_max(eig);
}

void require_small(cplx z, const EigenPair& eig, const BoundStateOptions& opts) {
    const double zmax = z_limit(eig, opts);
    if (std::abs(z) > zmax)
        throw PreconditionError("|z| = " + std::to_string(std::abs(z)) + " exceeds z_max = " +
                                std::to_string(zmax));
}

FixedPointIterate step_unchecked(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                                 const ComplexField& q0, double e0_prime,
                                 const BoundStateOptions& opts) {
    ComplexField Q0 = q0;
    Q0.axpy(z, eig.phi0);
    const ComplexField g0 = cubic(Q0, opts.nonlinearity);

    FixedPointIterate next;
    const double z2 = std::norm(z);
    next.e_prime = z2 > 0.0 ? (inner_l2(eig.phi0, g0) * std::conj(z)).real() / z2 : 0.0;

    ComplexField rhs = (-1.0) * g0;
    rhs.axpy(e0_prime, q0);
    next.q = deflated_solve(spec, eig, rhs, opts.solve_tol, opts.solve_max_iter, &q0);

    const double qn = norm_h2(next.q);
    if (qn > z2)
        throw ContractionSetViolation("||q||_H2 = " + std::to_string(qn) + " exceeds |z|^2 = " +
                                      std::to_string(z2) + "; z is too large");
    return next;
}

}  // namespace

double default_z_max(const EigenPair& eig) {
    const double l4 = norm_lp(eig.phi0, 4.0);
    return 0.2 / std::sqrt(l4 * l4 * l4 * l4);
}

FixedPointIterate fixed_point_step(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                                   const ComplexField& q0, double e0_prime,
                                   const BoundStateOptions& opts) {
    require_small(z, eig, opts);
    require_same_grid(eig.phi0.grid(), q0.grid(), "fixed_point_step");
    return step_unchecked(spec, eig, z, q0, e0_prime, opts);
}

double nonlinear_residual(const HamiltonianSpec& spec, const ComplexField& Q, double E,
                          Nonlinearity n) {
    ComplexField r = spec.apply(Q, -E);
    r += cubic(Q, n);
    return norm_l2(r);
}

BoundState solve_bound_state(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                             const BoundStateOptions& opts, const BoundState* warm) {
    require_small(z, eig, opts);
    const auto& grid = spec.grid();
    BoundState st;
    st.z = z;
    st.nonlinearity = opts.nonlinearity;

    FixedPointIterate cur{ComplexField(grid), 0.0};
    if (warm && std::abs(warm->z) > 0.0 && std::abs(z) > 0.0) {
        const cplx rot = (z / std::abs(z)) / (warm->z / std::abs(warm->z));
        cur.q = rot * warm->q;
        cur.e_prime = warm->e_prime;
    }

    if (std::abs(z) == 0.0) {
        st.Q = ComplexField(grid);
        st.q = ComplexField(grid);
        st.E = eig.e0;
        st.residual = nonlinear_residual(spec, st.Q, st.E, opts.nonlinearity);
        return st;
    }

    const double threshold = opts.tol * (1.0 + std::abs(z));
    bool converged = false;
    double last = 0.0;
    for (int k = 1; k <= opts.max_iter; ++k) {
        FixedPointIterate next = step_unchecked(spec, eig, z, cur.q, cur.e_prime, opts);
        const double dq = norm_h2(next.q - cur.q);
        last = dq + std::abs(next.e_prime - cur.e_prime);
        st.step_norms.push_back(dq);
        cur = std::move(next);
        st.iterations = k;
        if (last <= threshold) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonConvergence("bound-state fixed point", last, st.iterations);

    st.q = std::move(cur.q);
    st.e_prime = cur.e_prime;
    st.E = eig.e0 + st.e_prime;
    st.Q = st.q;
    st.Q.axpy(z, eig.phi0);
    st.residual = nonlinear_residual(spec, st.Q, st.E, opts.nonlinearity);
    return st;
}

DerivativeFields derivative_fields(const HamiltonianSpec& spec, const EigenPair& eig, cplx z,
                                   const BoundStateOptions& opts, double step) {
    DerivativeFields d;
    d.step = step > 0.0 ? step : 1e-4 * std::max(std::abs(z), 0.01);
    if (std::abs(z) + d.step > z_limit(eig, opts))
        throw PreconditionError("derivative_fields: |z| + step exceeds z_max");
    const double h = d.step;
    const BoundState centre = solve_bound_state(spec, eig, z, opts);
    const BoundState* warm = std::abs(z) > 0.0 ? &centre : nullptr;

    const auto xp = solve_bound_state(spec, eig, z + h, opts, warm);
    const auto xm = solve_bound_state(spec, eig, z - h, opts, warm);
    const auto yp = solve_bound_state(spec, eig, z + cplx(0.0, h), opts, warm);
    const auto ym = solve_bound_state(spec, eig, z - cplx(0.0, h), opts, warm);

    d.D1Q = (1.0 / (2.0 * h)) * (xp.Q - xm.Q);
    d.D2Q = (1.0 / (2.0 * h)) * (yp.Q - ym.Q);
    d.DE = {(xp.E - xm.E) / (2.0 * h), (yp.E - ym.E) / (2.0 * h)};

    ComplexField rot = (-z.imag()) * d.D1Q;
    rot.axpy(z.real(), d.D2Q);
    rot.axpy(cplx(0.0, -1.0), centre.Q);
    d.rotation_residual = norm_l2(rot);
    d.state = centre;
    return d;
}

DecayFit decay_fit(const ComplexField& Q) {
    const auto& grid = Q.grid();
    DecayFit fit;
    fit.r_min = 0.25 * 0.5 * grid.min_length();
    fit.r_max = 0.45 * 0.5 * grid.min_length();
    if (!(Q.max_abs() > 0.0)) throw InsufficientDecayWindow("decay_fit: field vanishes");

    std::vector<double> rs, ys;
    for (std::size_t j = 0; j < Q.size(); ++j) {
        const auto x = grid.point(j);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        const double a = std::abs(Q[j]);
        if (r < fit.r_min || r > fit.r_max || !(a > 1e-13)) continue;
        rs.push_back(r);
        ys.push_back(std::log(a));
    }
    fit.samples = int(rs.size());
    if (rs.size() < 8)
        throw InsufficientDecayWindow("decay_fit: only " + std::to_string(rs.size()) +
                                      " samples above the 1e-13 floor");
    const double n = double(rs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        sx += rs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        sxx += (rs[i] - mx) * (rs[i] - mx);
        sxy += (rs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    fit.beta = -slope;
    const double ss_res = syy - slope * sxy;
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        fit.sup_weighted = std::max(fit.sup_weighted, std::exp(fit.beta * rs[i] + ys[i]));
    return fit;
}

DecayFit decay_fit(const BoundState& state) { return decay_fit(state.Q); }

}  // namespace magnls
