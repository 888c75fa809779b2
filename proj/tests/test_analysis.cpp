#include "doctest.h"

#include "magnls/analysis.hpp"
#include "magnls/errors.hpp"
#include "magnls/spectrum.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace magnls;

TEST_CASE("admissibility of the named pairs") {
    CHECK(is_admissible(Rational::infinity(), Rational{2, 1}));
    CHECK(is_admissible(Rational{3, 1}, Rational{18, 5}));
    CHECK_FALSE(is_admissible(Rational{2, 1}, Rational{6, 1}));
    CHECK_FALSE(is_admissible(Rational{4, 1}, Rational{2, 1}));
    CHECK(is_admissible(Rational{-3, -1}, Rational{36, 10}));
    CHECK_FALSE(is_admissible(Rational::infinity(), Rational::infinity()));
}

TEST_CASE("property: every point of the admissible line is accepted, its neighbours are not") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::int64_t> den_d(1, 1'000'000);
    int checked = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const std::int64_t pd = den_d(rng);
        std::uniform_int_distribution<std::int64_t> num_d(2 * pd, 6 * pd - 1);
        const std::int64_t pn = num_d(rng);
        // 2/q = 3/2 - 3/p  =>  q = 4 pn / (3 pn - 6 pd)
        const std::int64_t qd = 3 * pn - 6 * pd;
        const Rational q = qd == 0 ? Rational::infinity() : Rational{4 * pn, qd};
        const Rational p{pn, pd};
        REQUIRE(is_admissible(q, p));
        if (qd != 0) {
            CHECK_FALSE(is_admissible(Rational{4 * pn + 1, qd}, p));
            CHECK_FALSE(is_admissible(Rational{4 * pn, qd + 1}, p));
            // same ratio, scaled representation
            CHECK(is_admissible(Rational{8 * pn, 2 * qd}, Rational{3 * pn, 3 * pd}));
        }
        CHECK_FALSE(is_admissible(q, Rational{6 * pd, pd}));
        ++checked;
    }
    CHECK(checked == 20000);
    // p at or beyond 6, or below 2, never admissible
    for (std::int64_t pn = 1; pn <= 200; ++pn)
        for (std::int64_t qn = 1; qn <= 50; ++qn) {
            const Rational p{pn, 10};
            if (pn < 20 || pn >= 60) CHECK_FALSE(is_admissible(Rational{qn, 1}, p));
        }
}

TEST_CASE("W^{1,p} at p = 2 is the H1 norm; W^{2,p} sums three Lp norms") {
    const GridSpec g({128}, {20.0});
    const auto f = ComplexField::sample(g, [](const Point& x) { return std::exp(-x[0] * x[0]) * std::cos(3 * x[0]); });
    CHECK(norm_w1p(f, 2.0) == doctest::Approx(norm_h1(f)).epsilon(1e-12));
    const auto grad = full_gradient(f);
    const double w2 = norm_lp(f, 3.0) + norm_lp(grad[0], 3.0) + norm_lp(laplacian(f), 3.0);
    CHECK(norm_w2p(f, 3.0) == doctest::Approx(w2).epsilon(1e-12));
}

TEST_CASE("weighted H1 norm") {
    const GridSpec g({256}, {40.0});
    const auto f = gaussian_profile(1.0, 1.0, g);
    const auto w = japanese_weight(g, -4.1);
    const double expected = norm_l2(pointwise(w, f)) + norm_l2(pointwise(w, full_gradient(f)[0]));
    CHECK(norm_weighted_h1(f, 4.1) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(norm_weighted_h1(f, 4.1) < norm_h1(f));
    NormConfig bad;
    bad.sigma = 3.0;
    CHECK_THROWS_WITH_AS(bad.validate(), "modulation.sigma must exceed 4", PreconditionError);
}

TEST_CASE("X-norm accumulator on a constant series") {
    XNormAccumulator acc(4.1);
    for (int i = 0; i <= 10; ++i) acc.add_values(0.1 * i, 2.0, 3.0, 5.0);
    CHECK(acc.weighted_l2() == doctest::Approx(2.0));
    CHECK(acc.strichartz_l3() == doctest::Approx(3.0));
    CHECK(acc.sup_h1() == doctest::Approx(5.0));
    CHECK(acc.total() == doctest::Approx(10.0));
    CHECK(acc.samples() == 11);
}

TEST_CASE("space-time norm of a stationary field") {
    const GridSpec g({64}, {10.0});
    const auto f = gaussian_profile(1.0, 1.0, g);
    std::vector<double> t{0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<ComplexField> frames(5, f);
    const double w = norm_lp(f, 3.0);
    CHECK(space_time_norm(t, frames, Rational{3, 1}, 3.0) == doctest::Approx(w * std::cbrt(2.0)));
    CHECK(space_time_norm(t, frames, Rational::infinity(), 3.0) == doctest::Approx(w));
}

TEST_CASE("random band-limited fields") {
    const GridSpec g({128}, {20.0});
    const auto a = random_band_limited(g, 2.0, 17);
    const auto b = random_band_limited(g, 2.0, 17);
    const auto c = random_band_limited(g, 2.0, 18);
    CHECK((a - b).max_abs() == 0.0);
    CHECK((a - c).max_abs() > 0.0);
    CHECK(norm_l2(a) == doctest::Approx(1.0).epsilon(1e-13));
    const auto ah = dft(a);
    for (std::size_t m = 0; m < g.total(); ++m)
        if (std::abs(g.wavenumber(0, m)) > 2.0) CHECK(std::abs(ah[m]) <= 1e-13);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("weighted resolvent norms agree with a dense SVD") {
    // tests/oracles/dense_1d.py resolvent
    const HamiltonianSpec spec(build_gaussian_well(-1.0, 1.0, GridSpec({256}, {51.2})));
    const auto eig = ground_state(spec);
    CHECK(eig.e0 == doctest::Approx(-0.353991857614545).epsilon(1e-10));
    const std::vector<double> ref{0.369449192311626, 0.321327187882986, 0.285901222492863,
                                  0.583082462351922, 0.413996568543441, 0.103263615494995,
                                  0.0606987744606646, 0.187572316702924, 0.219750214306165,
                                  0.0677593384450798, 0.0427032833704283, 0.142701287965797,
                                  0.118927055376893, 0.0436596705222057, 0.0351869635516724,
                                  0.145686230993342};
    SolverOptions opts;
    opts.tol_rel = 1e-10;
    const auto scan = resolvent_bound_scan(spec, &eig, 4.1, default_lambda_grid(), 1e-2, opts, 3);
    REQUIRE(scan.rows.size() == ref.size());
    CHECK(scan.all_converged);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        INFO("lambda = " << scan.rows[i].lambda);
        CHECK(std::abs(scan.rows[i].norm - ref[i]) <= 1e-3 * ref[i]);
    }
}

TEST_CASE("norm equivalence with the K rule") {
    const HamiltonianSpec spec(build_sech2_well(-2.0, 1.0, GridSpec({256}, {30.0})));
    for (double p : {2.0, 3.6}) {
        const auto r = norm_equivalence_check(spec, p, 32, 5);
        CHECK(r.passed);
        CHECK(r.ratios.size() == 32);
        CHECK(r.r_min >= 1e-3);
        CHECK(r.r_max <= 100 * r.r_min);
    }
    const auto r = norm_equivalence_check(spec, 2.0, 4, 9);
    CHECK(*std::min_element(r.ratios.begin(), r.ratios.end()) == doctest::Approx(r.r_min));
}

TEST_CASE("Strichartz ratios stay within a decade of their median") {
    const HamiltonianSpec spec(build_sech2_well(-2.0, 1.0, GridSpec({256}, {40.0})));
    const auto eig = ground_state(spec);
    StrichartzOptions o;
    o.t_final = 1.0;
    o.dt = 1e-2;
    for (auto mode : {StrichartzMode::homogeneous, StrichartzMode::inhomogeneous}) {
        const auto st = strichartz_ratio(spec, &eig, {Rational{3, 1}, Rational{18, 5}}, 4, mode, o, 1);
        CHECK(st.ratios.size() == 4);
        CHECK(st.passed);
        CHECK(st.min > 0.0);
    }
    CHECK_THROWS_AS(strichartz_ratio(spec, &eig, {Rational{2, 1}, Rational{6, 1}}, 2,
                                     StrichartzMode::homogeneous, o, 1),
                    PreconditionError);
}
