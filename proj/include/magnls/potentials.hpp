#pragma once

#include "magnls/grid.hpp"

#include <string>
#include <vector>

namespace magnls {

/// Real vector potential A, real scalar potential V and the spectral
/// divergence of A, plus the decay metadata the validators check against.
struct PotentialPair {
    VectorField A;
    ComplexField V;
    ComplexField div_A;
    double decay_eps = 0.5;
    double lq_exponent = 4.0;

    /// Zeroes round-off imaginary parts, recomputes div_A. Throws
    /// PreconditionError if A or V carry imaginary parts above 1e-13 or
    /// non-finite samples, and StructuralError on grid mismatch.
    static PotentialPair make(VectorField A, ComplexField V, double decay_eps = 0.5,
                              double lq_exponent = 4.0);

    const GridSpec& grid() const { return V.grid(); }
};

// Builders --------------------------------------------------------------------

/// V = depth exp(-|x|^2 / width^2), A = 0. Requires width <= L_min / 10.
PotentialPair build_gaussian_well(double depth, double width, const GridSpec& grid);

/// V = depth sech^2(|x| / width), A = 0. In 1D with depth = -l(l+1) and
/// width = 1 this is the Poschl-Teller well with ground state sech^l.
PotentialPair build_sech2_well(double depth, double width, const GridSpec& grid);

/// Real profile amplitude exp(-|x|^2 / width^2), used as a gauge function.
ComplexField gaussian_profile(double amplitude, double width, const GridSpec& grid);

/// A = grad chi, computed spectrally. chi must be real.
VectorField build_gauge_field(const ComplexField& chi);

/// Divergence-free azimuthal field
///   A = amplitude / radius * exp(-|x|^2 / width^2) (-x_2, x_1, 0),
/// so |A| reaches about `amplitude` on the circle of the given radius when
/// radius is comparable to width. Needs dim >= 2.
VectorField build_localized_loop_field(double amplitude, double radius, double width,
                                       const GridSpec& grid);

/// Same pair with A replaced.
PotentialPair with_vector_potential(const PotentialPair& p, VectorField A);

// Validation ------------------------------------------------------------------

enum class Status { pass, warn, fail, not_checked };

std::string to_string(Status s);

struct TailRow {
    double radius = 0.0;
    double a_split_norm = 0.0;        ///< ||A||_{L^q + L^inf(|x| > R)}
    double v_minus_split_norm = 0.0;  ///< ||V_-||_{L^2 + L^inf(|x| > R)}
};

struct ValidationReport {
    Status self_adjointness = Status::not_checked;
    Status pointwise_decay_A = Status::not_checked;
    Status pointwise_decay_V = Status::not_checked;
    Status tail_decay = Status::not_checked;
    Status fractional_sobolev = Status::not_checked;
    Status zero_resonance = Status::not_checked;
    /// Fitted exponents alpha in |A| <= C <x>^-alpha and <x>|V| <= C <x>^-alpha;
    /// +inf when the field vanishes on the fit window.
    double alpha_A = 0.0;
    double alpha_V = 0.0;
    std::vector<TailRow> tails;
    std::vector<std::string> notes;

    bool passed() const;
};

/// Approximates ||f||_{L^q + L^inf} restricted to `mask` (nonzero entries)
/// as the minimum over a 32-point log grid of thresholds tau of
/// ||f 1_{|f| > tau}||_q + tau.
double split_norm(const ComplexField& f, double q, const std::vector<bool>& mask);

/// Least-squares exponent alpha for |f(x)| ~ C <x>^-alpha, fitted to the
/// per-shell maxima of |f| over L_min/4 <= |x| <= L_min/2.
double fit_power_decay(const ComplexField& f);

ValidationReport validate(const PotentialPair& p);

}  // namespace magnls
