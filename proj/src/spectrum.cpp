#include "magnls/spectrum.hpp"

#include "magnls/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace magnls {

namespace {

// Modified Gram-Schmidt, two passes. Vectors that collapse are replaced by
// fresh random directions drawn from `rng`.
void orthonormalize(std::vector<ComplexField>& block, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < block.size(); ++i) {
        for (int attempt = 0; attempt < 3; ++attempt) {
            const double before = norm_l2(block[i]);
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t j = 0; j < i; ++j)
                    block[i].axpy(-inner_l2(block[j], block[i]), block[j]);
            const double after = norm_l2(block[i]);
            if (after > 1e-10 * before && after > 0.0) {
                block[i] *= 1.0 / after;
                break;
            }
            for (auto& v : block[i].values()) v = {normal(rng), normal(rng)};
        }
    }
}

}  // namespace

ComplexField fix_phase(const ComplexField& f) {
    std::size_t best = 0;
    double m = -1.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double a = std::abs(f[j]);
        if (a > m) {
            m = a;
            best = j;
        }
    }
    if (m <= 0.0) return f;
    const cplx phase = std::conj(f[best]) / m;
    ComplexField out = f;
    out *= phase;
    out[best] = m;
    return out;
}

EigenBlock lowest_eigenpairs(const HamiltonianSpec& spec, int count, const EigenOptions& opts) {
    if (count < 1) throw PreconditionError("eigenpair count must be positive");
    const auto& grid = spec.grid();
    const int b = count + 2;
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;

    std::vector<ComplexField> X;
    const double w = grid.min_length() / 8.0;
    X.push_back(ComplexField::sample(grid, [w](const Point& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (w * w));
    }));
    for (int i = 1; i < b; ++i) {
        ComplexField r(grid);
        for (auto& v : r.values()) v = {normal(rng), normal(rng)};
        X.push_back(std::move(r));
    }
    orthonormalize(X, rng);

    const double safe_shift = spec.lower_bound() - 1.0;
    double shift = safe_shift;
    EigenBlock out;
    std::vector<double> theta(b, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> prev = theta;
    std::vector<ComplexField> HX;
    double best_res = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int it = 1; it <= opts.max_iter; ++it) {
        std::vector<ComplexField> Y;
        Y.reserve(b);
        for (int i = 0; i < b; ++i) {
            auto solved = shifted_solve_detailed(spec, shift, X[i], opts.solve_tol, 4000);
            // Solves that stall at the round-off floor are still usable; a
            // curvature breakdown means the moved shift overshot e0.
            if (solved.breakdown || !(solved.rel_residual <= 1e-8)) {
                if (shift == safe_shift)
                    throw NonConvergence("shift-invert solve", solved.rel_residual,
                                         solved.iterations);
                shift = safe_shift;
                Y.clear();
                i = -1;
                continue;
            }
            Y.push_back(std::move(solved.x));
        }
        orthonormalize(Y, rng);

        std::vector<ComplexField> HY;
        HY.reserve(Y.size());
        for (const auto& y : Y) HY.push_back(spec.apply(y));
        Eigen::MatrixXcd G(b, b);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j) G(i, j) = inner_l2(Y[i], HY[j]);
        G = 0.5 * (G + G.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(G);
        const auto& U = solver.eigenvectors();

        X.assign(b, ComplexField(grid));
        HX.assign(b, ComplexField(grid));
        std::vector<double> res(b);
        for (int i = 0; i < b; ++i) {
            for (int j = 0; j < b; ++j) {
                X[i].axpy(U(j, i), Y[j]);
                HX[i].axpy(U(j, i), HY[j]);
            }
            theta[i] = solver.eigenvalues()(i);
            ComplexField r = HX[i];
            r.axpy(-theta[i], X[i]);
            res[i] = norm_l2(r);
        }

        double worst = 0.0;
        bool settled = true;
        for (int i = 0; i < count; ++i) {
            worst = std::max(worst, res[i]);
            const double change = std::abs(theta[i] - prev[i]);
            if (!(change <= opts.eigenvalue_tol * std::max(1.0, std::abs(theta[i]))))
                settled = false;
        }
        prev = theta;
        out.iterations = it;

        if (worst < 0.7 * best_res) {
            best_res = worst;
            since_best = 0;
        } else {
            ++since_best;
        }
        const bool done = (settled && worst <= opts.residual_tol) ||
                          (worst <= 1e-9 && settled && since_best >= 4);
        if (done || it == opts.max_iter) {
            for (int i = 0; i < count; ++i) {
                out.values.push_back(theta[i]);
                out.vectors.push_back(X[i]);
                out.residuals.push_back(res[i]);
            }
            // Spare Ritz value: an upper bound for the next eigenvalue.
            out.values.push_back(theta[count]);
            out.residuals.push_back(res[count]);
            return out;
        }

        // Move the shift up toward the lowest Ritz value once a residual
        // bound keeps it below the true ground state: an eigenvalue lies in
        // [theta_0 - res_0, theta_0] and Ritz values bound from above.
        if (res[0] < 1e-3) {
            const double spread = theta[count] - theta[0];
            const double candidate = theta[0] - std::max(2.0 * res[0], 0.1 * spread);
            shift = std::max(safe_shift, candidate);
        }
    }
    throw NonConvergence("eigensolver", best_res, opts.max_iter);
}

EigenPair ground_state(const HamiltonianSpec& spec, const EigenOptions& opts) {
    auto block = lowest_eigenpairs(spec, 1, opts);
    const double lowest = block.values[0];
    if (lowest >= -1e-10) throw NoBoundState(lowest);

    ComplexField phi = fix_phase(block.vectors[0]);
    if (!spec.has_magnetic_field())
        for (auto& v : phi.values()) v = v.real();
    phi *= 1.0 / norm_l2(phi);

    EigenPair eig;
    const ComplexField Hphi = spec.apply(phi);
    eig.e0 = inner_real(phi, Hphi);
    ComplexField r = Hphi;
    r.axpy(-eig.e0, phi);
    eig.residual = norm_l2(r);
    eig.phi0 = std::move(phi);
    eig.gap = std::min(block.values[1], 0.0) - eig.e0;
    if (!(eig.residual <= 1e-9)) throw NonConvergence("ground state", eig.residual, block.iterations);
    return eig;
}

SpectrumScan low_spectrum_scan(const HamiltonianSpec& spec, int count, double gap_tol,
                               const EigenOptions& opts) {
    if (count < 1 || count > 8) throw PreconditionError("low_spectrum_scan: count must be in [1, 8]");
    auto block = lowest_eigenpairs(spec, count, opts);
    SpectrumScan scan;
    for (int i = 0; i < count; ++i) {
        scan.lines.push_back({block.values[i], block.residuals[i]});
        if (block.values[i] < -gap_tol) ++scan.negative_count;
    }
    scan.single_bound_state = scan.negative_count == 1;
    return scan;
}

}  // namespace magnls
