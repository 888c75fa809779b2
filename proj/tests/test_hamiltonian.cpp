#include "doctest.h"

#include "magnls/errors.hpp"
#include "magnls/hamiltonian.hpp"
#include "magnls/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace magnls;
using Mat = Eigen::MatrixXcd;

namespace {

ComplexField random_field(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexField f(g);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = {n(rng), n(rng)};
    return f;
}

Mat assemble(const GridSpec& g, const std::function<ComplexField(const ComplexField&)>& op) {
    const auto n = Eigen::Index(g.total());
    Mat M(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        ComplexField e(g);
        e[std::size_t(c)] = 1.0;
        const auto col = op(e);
        for (Eigen::Index r = 0; r < n; ++r) M(r, c) = col[std::size_t(r)];
    }
    return M;
}

// 1D spectral matrices built from the DFT matrix
Mat fourier_multiplier(std::size_t n, double length, const std::function<cplx(double, bool)>& m) {
    const auto N = Eigen::Index(n);
    Mat F(N, N), Finv(N, N);
    for (Eigen::Index a = 0; a < N; ++a)
        for (Eigen::Index b = 0; b < N; ++b) {
            F(a, b) = std::polar(1.0, -2 * M_PI * double(a * b) / double(n));
            Finv(a, b) = std::conj(F(a, b)) / double(n);
        }
    Eigen::VectorXcd d(N);
    for (Eigen::Index a = 0; a < N; ++a) {
        const long m_signed = a < N / 2 ? long(a) : long(a) - long(N);
        d(a) = m(2 * M_PI * double(m_signed) / length, a == N / 2);
    }
    return Finv * d.asDiagonal() * F;
}

HamiltonianSpec magnetic_1d(std::size_t n, double length) {
    const GridSpec g({n}, {length});
    auto pot = build_gaussian_well(-2.0, 1.0, g);
    const auto A = ComplexField::sample(g, [](const Point& x) { return 0.6 * x[0] * std::exp(-x[0] * x[0] / 2); });
    return HamiltonianSpec(with_vector_potential(pot, VectorField({A})));
}

}  // namespace

TEST_CASE("H agrees with an independent dense assembly and is Hermitian") {
    const std::size_t n = 32;
    const double L = 12.0;
    const auto spec = magnetic_1d(n, L);
    const auto& g = spec.grid();
    const Mat H = assemble(g, [&](const ComplexField& f) { return apply_H(spec, f); });

    const Mat D = fourier_multiplier(n, L, [](double k, bool nyq) { return nyq ? cplx(0.0) : cplx(0.0, k); });
    const Mat D2 = fourier_multiplier(n, L, [](double k, bool) { return cplx(-k * k); });
    Eigen::VectorXcd a(n), v(n);
    for (std::size_t j = 0; j < n; ++j) {
        a(Eigen::Index(j)) = spec.potentials().A[0][j];
        v(Eigen::Index(j)) = spec.potentials().V[j];
    }
    const Mat Adiag = a.asDiagonal();
    const Mat oracle = -D2 + cplx(0.0, 1.0) * (Adiag * D + D * Adiag) + Mat(v.asDiagonal());

    CHECK((H - oracle).cwiseAbs().maxCoeff() <= 1e-11 * oracle.cwiseAbs().maxCoeff());
    CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());

    // H1 = H + K
    const Mat H1 = assemble(g, [&](const ComplexField& f) { return apply_H1(spec, f); });
    CHECK((H1 - H - spec.K() * Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("symmetric form matches -Lap + 2iA.grad + i div A on band-limited fields") {
    const auto spec = magnetic_1d(256, 24.0);
    const auto& g = spec.grid();
    const auto f = ComplexField::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0] / 3); });
    const auto& p = spec.potentials();
    ComplexField expected = -1.0 * laplacian(f) + pointwise(p.V, f);
    expected += cplx(0.0, 2.0) * pointwise(p.A[0], derivative(f, 0));
    expected += cplx(0.0, 1.0) * pointwise(p.div_A, f);
    CHECK((apply_H(spec, f) - expected).max_abs() <= 1e-9);
}

TEST_CASE("K rule and spectral lower bound") {
    const GridSpec g({64}, {20.0});
    const HamiltonianSpec spec(build_sech2_well(-2.0, 1.0, g));
    CHECK(spec.K() == doctest::Approx(2.0 + 0.0 + 1.0 + 1.0));
    CHECK(spec.k_rule_satisfied());
    CHECK(spec.lower_bound() == doctest::Approx(-2.0));
    const HamiltonianSpec zero(build_sech2_well(-2.0, 1.0, g), 1.0, 0.0);
    CHECK_FALSE(zero.k_rule_satisfied());
    const auto H1 = assemble(g, [&](const ComplexField& f) { return apply_H1(spec, f); });
    Eigen::SelfAdjointEigenSolver<Mat> es(H1);
    CHECK(es.eigenvalues().minCoeff() >= 1.0);
}

TEST_CASE("gauge transform conjugates H by exp(i chi)") {
    const GridSpec g({128, 128}, {20.0, 20.0});
    const HamiltonianSpec spec(build_gaussian_well(-2.0, 1.0, g));
    const auto chi = gaussian_profile(0.8, 1.5, g);
    const auto spec2 = gauge_transform(spec, chi);
    CHECK(spec2.has_magnetic_field());
    ComplexField phase(g);
    for (std::size_t j = 0; j < g.total(); ++j) phase[j] = std::polar(1.0, chi[j].real());
    const auto f = ComplexField::sample(g, [](const Point& x) { return std::exp(-(x[0] * x[0] + 2 * x[1] * x[1]) / 2); });
    const auto lhs = apply_H(spec2, pointwise(phase, f));
    const auto rhs = pointwise(phase, apply_H(spec, f));
    CHECK((lhs - rhs).max_abs() <= 1e-8 * rhs.max_abs());
}

TEST_CASE("resolvent and shifted solves satisfy their equations") {
    const auto spec = magnetic_1d(128, 24.0);
    const auto& g = spec.grid();
    const auto f = random_field(g, 3);
    SolverOptions opts;
    opts.tol_rel = 1e-11;
    for (cplx zeta : {cplx(1.0, 0.1), cplx(-0.5, 1e-3), cplx(4.0, -0.05)}) {
        const auto u = resolvent_solve(spec, zeta, f, opts);
        const auto r = apply_H(spec, u) - zeta * u - f;
        CHECK(norm_l2(r) <= 1e-10 * norm_l2(f));
    }
    const double shift = spec.lower_bound() - 1.0;
    const auto u = shifted_solve(spec, shift, f, 1e-12, 2000);
    CHECK(norm_l2(apply_H(spec, u) - shift * u - f) <= 1e-11 * norm_l2(f));
    CHECK_THROWS_AS(resolvent_solve(spec, cplx(1.0, 0.0), f), PreconditionError);
}

TEST_CASE("continuous projection and deflated solve") {
    const GridSpec g({256}, {30.0});
    const HamiltonianSpec spec(build_sech2_well(-2.0, 1.0, g));
    const auto eig = ground_state(spec);
    const auto f = random_field(g, 9);
    const auto pf = project_continuous(spec, eig, f);
    CHECK(std::abs(inner_l2(eig.phi0, pf)) <= 1e-13 * norm_l2(f));
    CHECK(norm_l2(project_continuous(spec, eig, pf) - pf) <= 1e-14 * norm_l2(f));
    const auto u = deflated_solve(spec, eig, f, 1e-12, 4000);
    CHECK(std::abs(inner_l2(eig.phi0, u)) <= 1e-12 * norm_l2(u));
    const auto r = apply_H(spec, u) - eig.e0 * u - pf;
    CHECK(norm_l2(r) <= 1e-10 * norm_l2(f));
}
