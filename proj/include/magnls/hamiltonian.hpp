#pragma once

// Magnetic Schrodinger operator
//   H = -Delta + 2i A.grad + i (div A) + V
// on the periodic grid, together with the shifted operators H0 = H - e0 and
// H1 = H + K, resolvent solves and the projection onto the continuous
// spectral subspace.

#include "magnls/grid.hpp"
#include "magnls/krylov.hpp"
#include "magnls/potentials.hpp"

#include <optional>
#include <vector>

namespace magnls {

struct SolverOptions {
    double tol_rel = 1e-8;
    int max_iter = 10000;
    /// Absorption parameters used for the +i0 limit of resolvent scans.
    std::vector<double> resolvent_eps{1e-2, 1e-3};
};

/// Linear ground state of H; produced by ground_state() in spectrum.hpp.
struct EigenPair {
    double e0 = 0.0;
    ComplexField phi0;
    double residual = 0.0;
    /// Distance from e0 to the next computed eigenvalue, capped at the
    /// continuum edge 0.
    double gap = 0.0;
};

class HamiltonianSpec {
public:
    /// K defaults to the positivity rule ||V||_inf + ||div A||_inf + c_pos + 1.
    explicit HamiltonianSpec(PotentialPair potentials, double c_pos = 1.0,
                             std::optional<double> K = std::nullopt);

    const PotentialPair& potentials() const noexcept { return potentials_; }
    const GridSpec& grid() const noexcept { return potentials_.grid(); }
    double K() const noexcept { return K_; }
    double c_pos() const noexcept { return c_pos_; }
    /// Smallest K allowed by the positivity rule.
    double k_rule_bound() const noexcept;
    bool k_rule_satisfied() const noexcept { return K_ >= k_rule_bound(); }
    bool has_magnetic_field() const noexcept { return magnetic_; }

    /// min over the grid of V - |A|^2, a lower bound for the spectrum of the
    /// discrete H (H = (i grad + A)^2 + V - |A|^2).
    double lower_bound() const noexcept { return lower_bound_; }

    /// (H + shift) f.
    ComplexField apply(const ComplexField& f, double shift = 0.0) const;

    /// idft(m(|k|^2) dft(f)) with the multiplier evaluated per bin.
    template <class Fn>
    ComplexField apply_k2_multiplier(const ComplexField& f, Fn&& m) const {
        require_same_grid(grid(), f.grid(), "apply_k2_multiplier");
        ComplexField out = f;
        detail::fft_forward(grid(), out.values());
        const double scale = 1.0 / double(grid().total());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] *= cplx(m(k2_[j])) * scale;
        detail::fft_inverse(grid(), out.values());
        return out;
    }

    const std::vector<double>& k2() const noexcept { return k2_; }

private:
    PotentialPair potentials_;
    double c_pos_;
    double K_;
    bool magnetic_;
    double lower_bound_;
    std::vector<double> k2_;
    std::vector<std::vector<double>> k_odd_;
};

/// H f = -Delta f + i sum_j (A_j d_j f + d_j (A_j f)) + V f. This symmetric
/// form equals -Delta f + 2i A.grad f + i (div A) f and is exactly Hermitian
/// on the grid.
ComplexField apply_H(const HamiltonianSpec& spec, const ComplexField& f);
/// H1 f = (H + K) f.
ComplexField apply_H1(const HamiltonianSpec& spec, const ComplexField& f);

/// A -> A + grad chi with V - |A|^2 held fixed, so that
/// H_new = exp(i chi) H_old exp(-i chi): the spectrum is unchanged and
/// eigenfunctions pick up the phase exp(i chi).
HamiltonianSpec gauge_transform(const HamiltonianSpec& spec, const ComplexField& chi);

/// Solves (H - zeta) u = f by right-preconditioned GMRES with the free
/// resolvent (-Delta - zeta)^-1. Requires |Im zeta| >= 1e-8. Throws
/// NonConvergence carrying the final residual.
ComplexField resolvent_solve(const HamiltonianSpec& spec, cplx zeta, const ComplexField& f,
                             const SolverOptions& opts = {}, const ComplexField* guess = nullptr);
KrylovResult resolvent_solve_detailed(const HamiltonianSpec& spec, cplx zeta,
                                      const ComplexField& f, const SolverOptions& opts = {},
                                      const ComplexField* guess = nullptr);

/// Solves (H - shift) u = f by preconditioned CG. The caller guarantees
/// that shift lies below the spectrum (lower_bound() always qualifies);
/// indefiniteness surfaces as NonConvergence.
ComplexField shifted_solve(const HamiltonianSpec& spec, double shift, const ComplexField& f,
                           double tol, int max_iter, const ComplexField* guess = nullptr);
KrylovResult shifted_solve_detailed(const HamiltonianSpec& spec, double shift,
                                    const ComplexField& f, double tol, int max_iter,
                                    const ComplexField* guess = nullptr);

/// f - (phi0, f) phi0 with the complex L2 pairing.
ComplexField project_continuous(const HamiltonianSpec& spec, const EigenPair& eig,
                                const ComplexField& f);

/// Solves H0 u = P_c f with u orthogonal to phi0, where H0 = H - e0 is
/// positive on the range of P_c. Uses CG on the deflated operator
/// P_c H0 P_c + phi0 phi0^*.
ComplexField deflated_solve(const HamiltonianSpec& spec, const EigenPair& eig,
                            const ComplexField& f, double tol, int max_iter,
                            const ComplexField* guess = nullptr);

}  // namespace magnls
