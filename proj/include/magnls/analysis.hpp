#pragma once

// Norms, Strichartz admissibility, X-norm accumulation and numerical probes
// of the linear estimates: weighted resolvent scan, norm equivalence for
// H1 = H + K, and Strichartz ratios along the discrete linear flow.

#include "magnls/hamiltonian.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace magnls {

struct NormConfig {
    double sigma = 4.1;
    std::vector<double> p_list{2.0, 18.0 / 5.0, 6.0};
    /// Throws PreconditionError unless sigma > 4 and every p >= 1.
    void validate() const;
};

/// Non-negative rational, or infinity when den == 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    static Rational infinity() { return {1, 0}; }
    bool is_infinite() const noexcept { return den == 0; }
    double value() const noexcept;
};

struct AdmissiblePair {
    Rational q;
    Rational p;
};

/// Exact check of 2/q + 3/p = 3/2 with 2 <= p < 6.
bool is_admissible(Rational q, Rational p);
inline bool is_admissible(const AdmissiblePair& pair) { return is_admissible(pair.q, pair.p); }

/// Gradient with the Nyquist bin kept, so that ||grad f||_2^2 equals
/// sum |k|^2 |f^|^2 / volume exactly.
VectorField full_gradient(const ComplexField& f);

/// (||f||_p^p + || |grad f| ||_p^p)^(1/p); max of the two for p = infinity.
/// p = 2 reproduces the spectral H1 norm.
double norm_w1p(const ComplexField& f, double p);
/// ||<x>^-sigma f||_2 + ||<x>^-sigma grad f||_2.
double norm_weighted_h1(const ComplexField& f, double sigma);
/// ||f||_p + || |grad f| ||_p + ||Delta f||_p.
double norm_w2p(const ComplexField& f, double p);

/// Trapezoid accumulation of
///   ||<x>^-sigma psi||_{L2_t H1}, ||psi||_{L3_t W^{1,18/5}}, ||psi||_{L_inf_t H1}.
class XNormAccumulator {
public:
    explicit XNormAccumulator(double sigma = 4.1);

    void add(double t, const ComplexField& psi);
    /// Adds precomputed spatial norms at time t (t strictly increasing).
    void add_values(double t, double weighted_h1, double w1_18_5, double h1);

    double weighted_l2() const noexcept;
    double strichartz_l3() const noexcept;
    double sup_h1() const noexcept { return sup_; }
    double total() const noexcept { return weighted_l2() + strichartz_l3() + sup_h1(); }
    int samples() const noexcept { return samples_; }

private:
    double sigma_;
    int samples_ = 0;
    double t_last_ = 0.0;
    double w_last_ = 0.0;
    double s_last_ = 0.0;
    double int_w2_ = 0.0;
    double int_s3_ = 0.0;
    double sup_ = 0.0;
};

struct ResolventRow {
    double lambda = 0.0;
    double norm = 0.0;         ///< estimated operator norm of M
    double scaled_norm = 0.0;  ///< <lambda> norm
    int power_iterations = 0;
    bool converged = true;     ///< false when a resolvent solve failed
};

struct ResolventScan {
    double eps = 0.0;
    double sigma = 0.0;
    std::vector<ResolventRow> rows;
    double max_scaled = 0.0;
    double median_scaled = 0.0;
    bool all_converged = true;
};

/// lambda_count points evenly spaced on [0, lambda_max].
std::vector<double> default_lambda_grid(int lambda_count = 16, double lambda_max = 6.0);

/// Power iteration on M*M for M = <x>^-sigma (H - lambda^2 - i eps)^-1 P_c <x>^-sigma,
/// with the estimate taken as the top Ritz value over the iterates. Stops
/// after 20 iterations, or once the relative change is < 1e-4 and the Ritz
/// residual is below 1e-4 of the Ritz value. P_c is omitted when eig is null.
ResolventScan resolvent_bound_scan(const HamiltonianSpec& spec, const EigenPair* eig,
                                   double sigma, const std::vector<double>& lambdas, double eps,
                                   const SolverOptions& opts = {}, std::uint64_t seed = 1);

struct NormEquivalence {
    double p = 2.0;
    int trials = 0;
    double r_min = 0.0;
    double r_max = 0.0;
    std::vector<double> ratios;
    bool passed = false;  ///< r_max / r_min <= 100 and r_min >= 1e-3
};

/// r = ||H1 phi||_p / ||phi||_{W^{2,p}} over random band-limited phi. Each
/// trial draws its band edge log-uniformly between the first nonzero mode
/// and half the Nyquist wavenumber.
NormEquivalence norm_equivalence_check(const HamiltonianSpec& spec, double p,
                                       int trial_count = 64, std::uint64_t seed = 1);

enum class StrichartzMode { homogeneous, inhomogeneous };

struct StrichartzStats {
    StrichartzMode mode = StrichartzMode::homogeneous;
    std::vector<double> ratios;
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    bool passed = false;  ///< max <= 10 median
};

struct StrichartzOptions {
    double t_final = 2.0;
    double dt = 1e-2;
    int stride = 5;  ///< quadrature nodes every stride steps
    double sigma = 4.1;
    double solve_tol = 1e-12;
};

/// ||f||_{L^q_t L^p_x} over the frames by trapezoid quadrature (q = inf: max).
double space_time_norm(const std::vector<double>& times, const std::vector<ComplexField>& frames,
                       Rational q, double p);

/// Homogeneous: ||exp(-itH) P_c f||_{L^q L^p} / ||f||_2 for random
/// localized f. Inhomogeneous: the Duhamel solution of i u_t = H u + P_c F
/// with u(0) = 0 against min(||<x>^sigma F||_{L2 H1}, ||F||_{L^q' W^{1,p'}}).
StrichartzStats strichartz_ratio(const HamiltonianSpec& spec, const EigenPair* eig,
                                 const AdmissiblePair& pair, int source_count,
                                 StrichartzMode mode, const StrichartzOptions& opts = {},
                                 std::uint64_t seed = 1);

/// Random smooth field: complex Gaussian coefficients on |k| <= k_band,
/// normalized in L2. Deterministic in the generator state.
ComplexField random_band_limited(const GridSpec& grid, double k_band, std::uint64_t seed);

double median(std::vector<double> v);

}  // namespace magnls
