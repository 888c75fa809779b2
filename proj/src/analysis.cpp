#include "magnls/analysis.hpp"

#include "magnls/errors.hpp"
#include "magnls/evolution.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace magnls {

void NormConfig::validate() const {
    if (!(sigma > 4.0)) throw PreconditionError("modulation.sigma must exceed 4");
    for (double p : p_list)
        if (!(p >= 1.0)) throw PreconditionError("norm exponent p must be >= 1");
}

double Rational::value() const noexcept {
    return den == 0 ? std::numeric_limits<double>::infinity() : double(num) / double(den);
}

bool is_admissible(Rational q, Rational p) {
    using i128 = __int128;
    auto normalize = [](Rational r) {
        if (r.den < 0) {
            r.den = -r.den;
            r.num = -r.num;
        }
        return r;
    };
    q = normalize(q);
    p = normalize(p);
    if (q.num <= 0 || p.num <= 0) return false;
    if (p.is_infinite()) return false;
    // 2 <= p < 6
    if (i128(p.num) < 2 * i128(p.den) || i128(p.num) >= 6 * i128(p.den)) return false;
    // 2 q.den / q.num + 3 p.den / p.num = 3/2, with 2/inf = 0
    if (q.is_infinite()) return 2 * i128(p.den) == i128(p.num);
    const i128 lhs = 2 * (2 * i128(q.den) * p.num + 3 * i128(p.den) * q.num);
    return lhs == 3 * i128(q.num) * p.num;
}

VectorField full_gradient(const ComplexField& f) {
    const auto& grid = f.grid();
    ComplexField fhat = f;
    detail::fft_forward(grid, fhat.values());
    const double scale = 1.0 / double(grid.total());
    std::vector<ComplexField> comps;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        ComplexField d = fhat;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const auto idx = grid.unflatten(j);
            d[j] *= cplx(0.0, grid.wavenumber(axis, idx[axis]) * scale);
        }
        detail::fft_inverse(grid, d.values());
        comps.push_back(std::move(d));
    }
    return VectorField(std::move(comps));
}

double norm_w1p(const ComplexField& f, double p) {
    if (!(p >= 1.0)) throw PreconditionError("norm_w1p: exponent must be >= 1");
    const ComplexField g = full_gradient(f).magnitude();
    const double a = norm_lp(f, p), b = norm_lp(g, p);
    if (std::isinf(p)) return std::max(a, b);
    if (a == 0.0 && b == 0.0) return 0.0;
    const double m = std::max(a, b);
    return m * std::pow(std::pow(a / m, p) + std::pow(b / m, p), 1.0 / p);
}

double norm_weighted_h1(const ComplexField& f, double sigma) {
    const ComplexField w = japanese_weight(f.grid(), -sigma);
    const ComplexField g = full_gradient(f).magnitude();
    return norm_l2(pointwise(w, f)) + norm_l2(pointwise(w, g));
}

double norm_w2p(const ComplexField& f, double p) {
    if (!(p >= 1.0)) throw PreconditionError("norm_w2p: exponent must be >= 1");
    return norm_lp(f, p) + norm_lp(full_gradient(f).magnitude(), p) + norm_lp(laplacian(f), p);
}

XNormAccumulator::XNormAccumulator(double sigma) : sigma_(sigma) {
    if (!(sigma > 4.0)) throw PreconditionError("XNormAccumulator: sigma must exceed 4");
}

void XNormAccumulator::add(double t, const ComplexField& psi) {
    add_values(t, norm_weighted_h1(psi, sigma_), norm_w1p(psi, 18.0 / 5.0), norm_h1(psi));
}

void XNormAccumulator::add_values(double t, double weighted_h1, double w1_18_5, double h1) {
    if (samples_ > 0) {
        if (!(t > t_last_)) throw PreconditionError("XNormAccumulator: times must increase");
        const double dt = t - t_last_;
        int_w2_ += 0.5 * dt * (w_last_ * w_last_ + weighted_h1 * weighted_h1);
        int_s3_ += 0.5 * dt * (s_last_ * s_last_ * s_last_ + w1_18_5 * w1_18_5 * w1_18_5);
    }
    t_last_ = t;
    w_last_ = weighted_h1;
    s_last_ = w1_18_5;
    sup_ = std::max(sup_, h1);
    ++samples_;
}

double XNormAccumulator::weighted_l2() const noexcept { return std::sqrt(int_w2_); }
double XNormAccumulator::strichartz_l3() const noexcept { return std::cbrt(int_s3_); }

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ComplexField random_band_limited(const GridSpec& grid, double k_band, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ComplexField fhat(grid);
    for (std::size_t j = 0; j < fhat.size(); ++j) {
        const auto idx = grid.unflatten(j);
        double k2 = 0.0;
        for (int i = 0; i < grid.dim(); ++i) {
            const double k = grid.wavenumber(i, idx[i]);
            k2 += k * k;
        }
        // Draw for every bin so the stream does not depend on the band.
        const double re = normal(rng), im = normal(rng);
        if (k2 <= k_band * k_band) fhat[j] = cplx(re, im);
    }
    detail::fft_inverse(grid, fhat.values());
    const double n = norm_l2(fhat);
    if (n > 0.0) fhat *= 1.0 / n;
    return fhat;
}

ResolventScan resolvent_bound_scan(const HamiltonianSpec& spec, const EigenPair* eig,
                                   double sigma, const std::vector<double>& lambdas, double eps,
                                   const SolverOptions& opts, std::uint64_t seed) {
    if (!(eps > 0.0)) throw PreconditionError("resolvent_bound_scan: eps must be positive");
    const auto& grid = spec.grid();
    const ComplexField w = japanese_weight(grid, -sigma);
    auto project = [&](const ComplexField& f) {
        return eig ? project_continuous(spec, *eig, f) : f;
    };

    ResolventScan scan;
    scan.eps = eps;
    scan.sigma = sigma;
    const ComplexField start = random_band_limited(grid, 0.5 * grid.max_wavenumber(), seed);

    for (double lambda : lambdas) {
        if (lambda < 0.0) throw PreconditionError("resolvent_bound_scan: lambda must be >= 0");
        ResolventRow row;
        row.lambda = lambda;
        const cplx zeta(lambda * lambda, eps);
        // Power iteration on M*M with Rayleigh-Ritz over the iterates (a
        // Lanczos process with full reorthogonalization); the estimate is
        // the square root of the largest Ritz value.
        std::vector<ComplexField> basis{(1.0 / norm_l2(start)) * start};
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(20, 20);
        double est = 0.0;
        try {
            for (int it = 1; it <= 20; ++it) {
                const ComplexField& v = basis.back();
                auto rm = resolvent_solve_detailed(spec, zeta, project(pointwise(w, v)), opts);
                if (!rm.converged)
                    throw NonConvergence("resolvent scan", rm.rel_residual, rm.iterations);
                const ComplexField u = pointwise(w, rm.x);
                auto ra = resolvent_solve_detailed(spec, std::conj(zeta), pointwise(w, u), opts);
                if (!ra.converged)
                    throw NonConvergence("resolvent scan", ra.rel_residual, ra.iterations);
                ComplexField y = pointwise(w, project(ra.x));
                const int k = it - 1;
                for (int i = 0; i <= k; ++i) T(i, k) = inner_l2(basis[std::size_t(i)], y);
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto& q : basis) y.axpy(-inner_l2(q, y), q);
                // only the upper triangle is computed; the solves are
                // inexact, so symmetrize from it
                Eigen::MatrixXcd H = T.topLeftCorner(it, it);
                for (int i = 0; i < it; ++i) {
                    H(i, i) = H(i, i).real();
                    for (int j = 0; j < i; ++j) H(i, j) = std::conj(H(j, i));
                }
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
                const double theta = std::max(es.eigenvalues()(it - 1), 0.0);
                const double next = std::sqrt(theta);
                row.power_iterations = it;
                const double change = est > 0.0 ? std::abs(next - est) / next : 1.0;
                est = next;
                const double ny = norm_l2(y);
                // ||M*M x - theta x|| for the top Ritz vector x
                const double ritz_resid = ny * std::abs(es.eigenvectors()(it - 1, it - 1));
                if (change < 1e-4 && ritz_resid <= 1e-4 * theta) break;
                if (!(ny > 1e-14 * theta)) break;
                basis.push_back((1.0 / ny) * y);
            }
        } catch (const NonConvergence&) {
            row.converged = false;
            scan.all_converged = false;
        }
        row.norm = est;
        row.scaled_norm = std::sqrt(1.0 + lambda * lambda) * est;
        scan.rows.push_back(row);
    }
    std::vector<double> scaled;
    for (const auto& r : scan.rows)
        if (r.converged) scaled.push_back(r.scaled_norm);
    if (!scaled.empty()) {
        scan.max_scaled = *std::max_element(scaled.begin(), scaled.end());
        scan.median_scaled = median(scaled);
    }
    return scan;
}

std::vector<double> default_lambda_grid(int lambda_count, double lambda_max) {
    if (lambda_count < 2) throw PreconditionError("lambda grid needs at least two points");
    std::vector<double> out;
    for (int i = 0; i < lambda_count; ++i) out.push_back(lambda_max * i / (lambda_count - 1));
    return out;
}

NormEquivalence norm_equivalence_check(const HamiltonianSpec& spec, double p, int trial_count,
                                       std::uint64_t seed) {
    if (!(p >= 1.0)) throw PreconditionError("norm_equivalence_check: p must be >= 1");
    if (trial_count < 1) throw PreconditionError("norm_equivalence_check: need trials");
    const auto& grid = spec.grid();
    double k_lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.dim(); ++i) k_lo = std::min(k_lo, grid.wavenumber(i, 1));
    const double k_hi = 0.5 * grid.max_wavenumber();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    NormEquivalence out;
    out.p = p;
    out.trials = trial_count;
    for (int t = 0; t < trial_count; ++t) {
        const double k_band = k_lo * std::pow(k_hi / k_lo, unit(rng));
        const ComplexField phi = random_band_limited(grid, k_band, rng());
        const double num = norm_lp(apply_H1(spec, phi), p);
        out.ratios.push_back(num / norm_w2p(phi, p));
    }
    out.r_min = *std::min_element(out.ratios.begin(), out.ratios.end());
    out.r_max = *std::max_element(out.ratios.begin(), out.ratios.end());
    out.passed = out.r_min >= 1e-3 && out.r_max <= 100.0 * out.r_min;
    return out;
}

double space_time_norm(const std::vector<double>& times, const std::vector<ComplexField>& frames,
                       Rational q, double p) {
    if (times.size() != frames.size() || times.empty())
        throw PreconditionError("space_time_norm: need matching, non-empty series");
    std::vector<double> n;
    for (const auto& f : frames) n.push_back(norm_lp(f, p));
    if (q.is_infinite()) return *std::max_element(n.begin(), n.end());
    const double qq = q.value();
    double s = 0.0;
    for (std::size_t i = 1; i < n.size(); ++i)
        s += 0.5 * (times[i] - times[i - 1]) * (std::pow(n[i], qq) + std::pow(n[i - 1], qq));
    return std::pow(s, 1.0 / qq);
}

namespace {

double w1p_space_time(const std::vector<double>& times, const std::vector<ComplexField>& frames,
                      double q, double p) {
    std::vector<double> n;
    for (const auto& f : frames) n.push_back(norm_w1p(f, p));
    if (std::isinf(q)) return *std::max_element(n.begin(), n.end());
    double s = 0.0;
    for (std::size_t i = 1; i < n.size(); ++i)
        s += 0.5 * (times[i] - times[i - 1]) * (std::pow(n[i], q) + std::pow(n[i - 1], q));
    return std::pow(s, 1.0 / q);
}

double dual(double r) { return std::isinf(r) ? 1.0 : (r == 1.0 ? INFINITY : r / (r - 1.0)); }

ComplexField localized_source(const GridSpec& grid, std::uint64_t seed) {
    const double width = grid.min_length() / 16.0;
    ComplexField f = random_band_limited(grid, 4.0 / width, seed);
    f *= ComplexField::sample(grid, [width](const Point& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width));
    });
    return f;
}

}  // namespace

StrichartzStats strichartz_ratio(const HamiltonianSpec& spec, const EigenPair* eig,
                                 const AdmissiblePair& pair, int source_count,
                                 StrichartzMode mode, const StrichartzOptions& opts,
                                 std::uint64_t seed) {
    if (!is_admissible(pair)) throw PreconditionError("strichartz_ratio: pair is not admissible");
    if (source_count < 1) throw PreconditionError("strichartz_ratio: need sources");
    if (!(opts.dt > 0.0) || !(opts.t_final >= opts.dt) || opts.stride < 1)
        throw PreconditionError("strichartz_ratio: bad time grid");
    const auto& grid = spec.grid();
    const int nsteps = int(std::llround(opts.t_final / opts.dt));
    auto project = [&](const ComplexField& f) {
        return eig ? project_continuous(spec, *eig, f) : f;
    };
    const double q = pair.q.value(), p = pair.p.value();

    std::mt19937_64 rng(seed);
    StrichartzStats st;
    st.mode = mode;
    for (int s = 0; s < source_count; ++s) {
        const ComplexField g = localized_source(grid, rng());
        std::vector<double> times{0.0};
        std::vector<ComplexField> frames;
        if (mode == StrichartzMode::homogeneous) {
            ComplexField u = project(g);
            frames.push_back(u);
            for (int k = 1; k <= nsteps; ++k) {
                u = crank_nicolson(spec, u, opts.dt, opts.solve_tol);
                if (k % opts.stride == 0 || k == nsteps) {
                    times.push_back(k * opts.dt);
                    frames.push_back(u);
                }
            }
            const double f2 = norm_l2(g);
            st.ratios.push_back(f2 > 0.0 ? space_time_norm(times, frames, pair.q, p) / f2 : 0.0);
        } else {
            // F(x, s) = P_c g(x) exp(-i omega s)
            const double omega = 4.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const ComplexField Pg = project(g);
            auto F = [&](double t) { return std::polar(1.0, -omega * t) * Pg; };
            const cplx half(0.0, -0.5 * opts.dt);
            ComplexField u(grid);
            frames.push_back(u);
            std::vector<ComplexField> sources{F(0.0)};
            for (int k = 1; k <= nsteps; ++k) {
                ComplexField a = u;
                a.axpy(half, F((k - 1) * opts.dt));
                u = crank_nicolson(spec, a, opts.dt, opts.solve_tol);
                u.axpy(half, F(k * opts.dt));
                if (k % opts.stride == 0 || k == nsteps) {
                    times.push_back(k * opts.dt);
                    frames.push_back(u);
                    sources.push_back(F(k * opts.dt));
                }
            }
            const double lhs = w1p_space_time(times, frames, q, p);
            // ||<x>^sigma F||_{L2_t H1}: weight -sigma in norm_weighted_h1 is <x>^+sigma.
            std::vector<double> wn;
            for (const auto& f : sources) wn.push_back(norm_weighted_h1(f, -opts.sigma));
            double s2 = 0.0;
            for (std::size_t i = 1; i < wn.size(); ++i)
                s2 += 0.5 * (times[i] - times[i - 1]) * (wn[i] * wn[i] + wn[i - 1] * wn[i - 1]);
            const double rhs1 = std::sqrt(s2);
            const double rhs2 = w1p_space_time(times, sources, dual(q), dual(p));
            const double rhs = std::min(rhs1, rhs2);
            st.ratios.push_back(rhs > 0.0 ? lhs / rhs : 0.0);
        }
    }
    st.min = *std::min_element(st.ratios.begin(), st.ratios.end());
    st.max = *std::max_element(st.ratios.begin(), st.ratios.end());
    st.median = median(st.ratios);
    st.passed = st.max <= 10.0 * st.median;
    return st;
}

}  // namespace magnls
