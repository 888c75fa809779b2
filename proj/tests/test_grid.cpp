#include "doctest.h"

#include "magnls/errors.hpp"
#include "magnls/grid.hpp"

#include <cmath>
#include <cstring>
#include <random>

using namespace magnls;

namespace {

ComplexField random_field(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexField f(g);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = {n(rng), n(rng)};
    return f;
}

// O(N^2) transform straight from the definition
ComplexField direct_dft(const ComplexField& f) {
    const auto& g = f.grid();
    ComplexField out(g);
    for (std::size_t m = 0; m < g.total(); ++m) {
        const auto mi = g.unflatten(m);
        Point k{};
        for (int a = 0; a < g.dim(); ++a) k[a] = g.wavenumber(a, mi[a]);
        cplx s = 0.0;
        for (std::size_t j = 0; j < g.total(); ++j) {
            const Point x = g.point(j);
            double phase = 0.0;
            for (int a = 0; a < g.dim(); ++a) phase += k[a] * x[a];
            s += f[j] * std::polar(1.0, -phase);
        }
        out[m] = s * g.cell_volume();
    }
    return out;
}

double max_diff(const ComplexField& a, const ComplexField& b) {
    return (a - b).max_abs();
}

}  // namespace

TEST_CASE("grid construction rejects bad shapes") {
    CHECK_THROWS_AS(GridSpec({12}, {1.0}), StructuralError);
    CHECK_THROWS_AS(GridSpec({16}, {-1.0}), StructuralError);
    CHECK_THROWS_AS(GridSpec({8, 8, 8, 8}, {1, 1, 1, 1}), StructuralError);
    CHECK_THROWS_AS(GridSpec({4}, {1.0}), StructuralError);
    const GridSpec g({16, 32}, {2.0, 4.0});
    CHECK(g.dim() == 2);
    CHECK(g.total() == 512);
    CHECK(g.spacing(1) == doctest::Approx(0.125));
    CHECK(g.coordinate(0, 0) == doctest::Approx(-1.0));
    CHECK(g.wavenumber(0, 15) == doctest::Approx(-2 * M_PI / 2.0));
}

TEST_CASE("FFT transform matches the direct sum") {
    for (const auto& g : {GridSpec({16}, {3.0}), GridSpec({8, 16}, {2.0, 5.0}),
                          GridSpec({8, 8, 8}, {1.0, 2.0, 3.0}), GridSpec({16}, {3.0}, false)}) {
        const ComplexField f = random_field(g, 11);
        const ComplexField fast = dft(f);
        const ComplexField slow = direct_dft(f);
        CHECK(max_diff(fast, slow) <= 1e-12 * slow.max_abs());
        CHECK(max_diff(idft(fast), f) <= 1e-13 * f.max_abs());
        CHECK(norm_l2_frequency(fast) == doctest::Approx(norm_l2(f)).epsilon(1e-13));
    }
}

TEST_CASE("derivatives of trigonometric modes are exact") {
    const GridSpec g({64}, {10.0});
    const double k = 2 * M_PI * 3 / 10.0;
    const auto s = ComplexField::sample(g, [&](const Point& x) { return std::sin(k * x[0]); });
    const auto c = ComplexField::sample(g, [&](const Point& x) { return k * std::cos(k * x[0]); });
    CHECK(max_diff(derivative(s, 0), c) <= 1e-12);
    CHECK(max_diff(laplacian(s), -k * k * s) <= 1e-11);

    // the Nyquist mode: dropped by d/dx, kept by the Laplacian
    const double kn = M_PI / g.spacing(0);
    const auto nyq = ComplexField::sample(g, [&](const Point& x) { return std::cos(kn * x[0]); });
    CHECK(derivative(nyq, 0).max_abs() <= 1e-12);
    CHECK(max_diff(laplacian(nyq), -kn * kn * nyq) <= 1e-9);
}

TEST_CASE("first derivative is skew-adjoint and the Laplacian self-adjoint") {
    const GridSpec g({16, 16}, {4.0, 6.0});
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto f = random_field(g, seed);
        const auto h = random_field(g, seed + 100);
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(inner_l2(f, derivative(h, a)) + inner_l2(derivative(f, a), h)) <= 1e-10);
        CHECK(std::abs(inner_l2(f, laplacian(h)) - inner_l2(laplacian(f), h)) <= 1e-9);
        // divergence is minus the adjoint of the gradient
        VectorField v({random_field(g, seed + 200), random_field(g, seed + 300)});
        const auto gr = gradient(f);
        const cplx lhs = inner_l2(gr[0], v[0]) + inner_l2(gr[1], v[1]);
        CHECK(std::abs(lhs + inner_l2(f, divergence(v))) <= 1e-10);
    }
}

TEST_CASE("Sobolev norms of a plane wave") {
    const GridSpec g({32}, {2 * M_PI});
    const auto f = ComplexField::sample(g, [](const Point& x) { return std::cos(4 * x[0]); });
    const double l2 = std::sqrt(M_PI);
    CHECK(norm_l2(f) == doctest::Approx(l2).epsilon(1e-13));
    CHECK(norm_h1(f) == doctest::Approx(l2 * std::sqrt(17.0)).epsilon(1e-13));
    CHECK(norm_h2(f) == doctest::Approx(l2 * 17.0).epsilon(1e-13));
    CHECK(norm_lp(f, INFINITY) == doctest::Approx(1.0));
    // ||cos||_4^4 = 3/8 * 2 pi
    CHECK(std::pow(norm_lp(f, 4.0), 4) == doctest::Approx(0.75 * M_PI).epsilon(1e-12));
}

TEST_CASE("weights and tail mass") {
    const GridSpec g({64}, {20.0});
    const auto w = japanese_weight(g, -2.0);
    CHECK(w[32].real() == doctest::Approx(1.0));
    CHECK(w[0].real() == doctest::Approx(1.0 / 101.0));
    const auto bump = ComplexField::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0]); });
    CHECK(tail_mass_fraction(bump) < 1e-20);
    const ComplexField flat(g, 1.0);
    CHECK(tail_mass_fraction(flat) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("snapshot round trip is bitwise") {
    const GridSpec g({8, 16}, {1.5, 2.5});
    const auto f = random_field(g, 5);
    const auto bytes = encode_snapshot(f);
    CHECK(bytes.size() == 8 + 4 + 2 * 8 + 2 * 8 + 16 * g.total());
    CHECK(std::memcmp(bytes.data(), "MNLSFLD1", 8) == 0);
    const auto back = decode_snapshot(bytes);
    CHECK(back.grid() == g);
    CHECK(std::memcmp(back.values().data(), f.values().data(), 16 * g.total()) == 0);

    auto broken = bytes;
    broken[0] = 'X';
    CHECK_THROWS_AS(decode_snapshot(broken), StructuralError);
    broken = bytes;
    broken.pop_back();
    CHECK_THROWS_AS(decode_snapshot(broken), StructuralError);
}

TEST_CASE("mismatched grids are structural errors") {
    const ComplexField a(GridSpec({16}, {1.0}));
    const ComplexField b(GridSpec({16}, {2.0}));
    CHECK_THROWS_AS(a + b, StructuralError);
    CHECK_THROWS_AS(inner_l2(a, b), StructuralError);
    CHECK_THROWS_AS(ComplexField(GridSpec({16}, {1.0}), std::vector<cplx>(15)), StructuralError);
}
