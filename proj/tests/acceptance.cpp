// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.

#include "magnls/analysis.hpp"
#include "magnls/bound_states.hpp"
#include "magnls/errors.hpp"
#include "magnls/evolution.hpp"
#include "magnls/modulation.hpp"
#include "magnls/runner.hpp"
#include "magnls/spectrum.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace magnls;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}
std::string e(double v) { return fmt("%.3e", v); }
std::string g(double v) { return fmt("%.4g", v); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / double(x.size());
        my += std::log(y[i]) / double(x.size());
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += std::pow(std::log(x[i]) - mx, 2);
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    }
    return sxy / sxx;
}

HamiltonianSpec sech2_512() { return HamiltonianSpec(build_sech2_well(-2.0, 1.0, GridSpec({512}, {40.0}))); }

const std::vector<double> kZ{0.01, 0.02, 0.04, 0.08};

// 1 ------------------------------------------------------------------------
Outcome linear_ground_state() {
    constexpr double kEigTol = 2e-6, kProfileTol = 1e-5, kOracleTol = 1e-10, kBudget = 10.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = sech2_512();
    const auto eig = ground_state(spec);
    const auto exact = ComplexField::sample(spec.grid(), [](const Point& x) { return 1.0 / (std::sqrt(2.0) * std::cosh(x[0])); });
    const double de = std::abs(eig.e0 + 1.0);
    const double dphi = (eig.phi0 - exact).max_abs();
    // frozen dense eigensolve, tests/oracles/dense_1d.py ground
    const auto small = ground_state(HamiltonianSpec(build_sech2_well(-2.0, 1.0, GridSpec({64}, {20.0}))));
    const double doracle = std::abs(small.e0 - -1.00000001673603);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {de <= kEigTol && dphi <= kProfileTol && doracle <= kOracleTol && secs < kBudget,
            "|e0+1| = " + e(de) + ", sup|phi0 - sech/sqrt2| = " + e(dphi) + ", dense n=64 |de| = " +
                e(doracle) + ", " + g(secs) + " s"};
}

// 2 ------------------------------------------------------------------------
Outcome gauge_covariance() {
    constexpr double kEigTol = 1e-8, kFamilyTol = 1e-7, kBudget = 60.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = sech2_512();
    const auto gauged = gauge_transform(spec, gaussian_profile(0.5, 1.0, spec.grid()));
    const auto a = ground_state(spec);
    const auto b = ground_state(gauged);
    const double de0 = std::abs(a.e0 - b.e0);
    double dE = 0.0;
    for (double z : kZ)
        dE = std::max(dE, std::abs(solve_bound_state(spec, a, z).E - solve_bound_state(gauged, b, z).E));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {de0 <= kEigTol && dE <= kFamilyTol && secs < kBudget,
            "|de0| = " + e(de0) + ", max |dE[z]| = " + e(dE) + ", " + g(secs) + " s"};
}

// 3, 4 -------------------------------------------------------------------------
struct FamilyResult {
    Outcome scalings, decay;
};

FamilyResult family_checks() {
    constexpr double kSlopeQ = 3.0, kSlopeE = 2.0, kSlopeTol = 0.3, kResidualTol = 1e-9, kBudget = 120.0;
    constexpr double kR2 = 0.98, kBetaRel = 0.2;
    const auto t0 = std::chrono::steady_clock::now();
    const auto spec = sech2_512();
    const auto eig = ground_state(spec);
    std::vector<double> q, ep;
    double worst_res = 0.0, min_r2 = 1.0, min_beta = INFINITY, beta_small = 0.0;
    for (double z : kZ) {
        const auto bs = solve_bound_state(spec, eig, z);
        q.push_back(norm_h2(bs.q));
        ep.push_back(std::abs(bs.e_prime));
        worst_res = std::max(worst_res, bs.residual);
        const auto fit = decay_fit(bs);
        min_r2 = std::min(min_r2, fit.r2);
        min_beta = std::min(min_beta, fit.beta);
        if (z == kZ.front()) beta_small = fit.beta;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double sq = slope(kZ, q), se = slope(kZ, ep);
    const double beta_ref = std::sqrt(-eig.e0);
    FamilyResult r;
    r.scalings = {std::abs(sq - kSlopeQ) <= kSlopeTol && std::abs(se - kSlopeE) <= kSlopeTol &&
                      worst_res <= kResidualTol && secs < kBudget,
                  "slope ||q||_H2 = " + g(sq) + ", slope |e'| = " + g(se) + ", max residual = " +
                      e(worst_res) + ", " + g(secs) + " s"};
    r.decay = {min_beta > 0.0 && min_r2 >= kR2 && std::abs(beta_small / beta_ref - 1.0) <= kBetaRel,
               "min beta = " + g(min_beta) + ", min r2 = " + fmt("%.6f", min_r2) +
                   ", beta(z=0.01) / sqrt(-e0) = " + g(beta_small / beta_ref)};
    return r;
}

// 5 ------------------------------------------------------------------------
Outcome bound_state_orbit() {
    constexpr double kOrbitTol = 1e-3, kMassTol = 1e-6, kEnergyTol = 1e-5;
    const auto spec = sech2_512();
    const auto eig = ground_state(spec);
    const auto bs = solve_bound_state(spec, eig, 0.1);
    EvolveConfig c;
    c.dt = 1e-3;
    c.t_final = 10.0;
    c.snapshot_stride = 100;
    c.conserve_tol = kMassTol;
    const auto tr = evolve(spec, bs.Q, c);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        worst = std::max(worst, norm_l2(tr.snapshots[i] - std::polar(1.0, -bs.E * tr.times[i]) * bs.Q));
    return {worst <= kOrbitTol && tr.max_mass_drift <= kMassTol && tr.max_energy_drift <= kEnergyTol,
            "max ||psi - e^{-iEt}Q|| = " + e(worst) + ", mass drift = " + e(tr.max_mass_drift) +
                ", energy drift = " + e(tr.max_energy_drift)};
}

// 6 to 9: stability suite ------------------------------------------------------
struct SuiteResult {
    Outcome decomposition, modulation, adjusted, scattering;
};

SuiteResult stability_suite() {
    constexpr double kReconTol = 1e-12, kOrthoTol = 1e-10, kGaugeTol = 1e-9;
    constexpr double kSlope = 2.0, kSlopeTol = 0.4, kBudget = 600.0, kTvRatio = 0.25, kGapRatio = 0.5;
    const std::vector<double> amplitudes{1e-3, 2e-3, 4e-3};
    constexpr double kReference = 2e-3, kWidth = 4.0;

    const auto t0 = std::chrono::steady_clock::now();
    const HamiltonianSpec spec(build_gaussian_well(-1.0, 1.0, GridSpec({1024}, {160.0})));
    const auto& grid = spec.grid();
    const auto eig = ground_state(spec);
    const auto bs = solve_bound_state(spec, eig, 0.05);
    EvolveConfig c;
    c.dt = 1e-3;
    c.t_final = 20.0;
    c.snapshot_stride = 100;
    const double wrap = wrap_around_time(grid, kWidth);

    std::vector<double> sizes, l1;
    double worst_ortho = 0.0, worst_recon = 0.0, tv_ratio = INFINITY, gap_ratio = INFINITY;
    bool complete = true;
    for (double a : amplitudes) {
        const auto pert = gaussian_profile(a, kWidth, grid);
        const auto tr = evolve(spec, bs.Q + pert, c);
        const auto rep = track(spec, eig, tr, {});
        complete = complete && !rep.truncated;
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            worst_ortho = std::max(worst_ortho, rep.ortho_resid[i] / rep.eta_h1[i]);
        // independent reconstruction at a few frames
        for (std::size_t i : {std::size_t(0), rep.times.size() / 2, rep.times.size() - 1}) {
            const auto rec = decompose(spec, eig, tr.snapshots[i], rep.z[i]);
            const auto Q = solve_bound_state(spec, eig, rec.z).Q;
            worst_recon = std::max(worst_recon, norm_l2(Q + rec.eta - tr.snapshots[i]) / norm_l2(tr.snapshots[i]));
        }
        sizes.push_back(norm_h1(pert));
        l1.push_back(rep.L1_mod_resid);
        if (a == kReference) {
            tv_ratio = rep.adjusted_tv_second / rep.adjusted_tv_first;
            gap_ratio = rep.scattering_gaps.size() == 3 ? rep.scattering_gaps[2] / rep.scattering_gaps[0] : INFINITY;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // gauge equivariance of (z, eta)
    const auto chi = gaussian_profile(0.5, 1.0, grid);
    const auto gspec = gauge_transform(spec, chi);
    const auto geig = ground_state(gspec);
    ComplexField phase(grid);
    for (std::size_t j = 0; j < grid.total(); ++j) phase[j] = std::polar(1.0, chi[j].real());
    const ComplexField psi = bs.Q + gaussian_profile(kReference, kWidth, grid);
    const auto d1 = decompose(spec, eig, psi);
    const auto d2 = decompose(gspec, geig, pointwise(phase, psi));
    const cplx rot = inner_l2(geig.phi0, pointwise(phase, eig.phi0));
    const double gauge_err = std::max(std::abs(d2.z - rot * d1.z), norm_h1(d2.eta - pointwise(phase, d1.eta)));

    SuiteResult r;
    r.decomposition = {complete && worst_recon <= kReconTol && worst_ortho <= kOrthoTol && gauge_err <= kGaugeTol,
                       "max reconstruction = " + e(worst_recon) + ", max ortho/||eta||_H1 = " +
                           e(worst_ortho) + ", gauge mismatch = " + e(gauge_err)};
    const double s = slope(sizes, l1);
    r.modulation = {std::abs(s - kSlope) <= kSlopeTol && secs < kBudget && c.t_final <= wrap,
                    "slope L1 residual vs ||psi0 - Q||_H1 = " + g(s) + ", window T = " + g(c.t_final) +
                        " <= wrap-around " + g(wrap) + ", " + g(secs) + " s"};
    r.adjusted = {tv_ratio <= kTvRatio, "TV second half / first half = " + g(tv_ratio)};
    const bool before_wrap = c.t_final <= wrap;
    r.scattering = {gap_ratio <= kGapRatio || !before_wrap,
                    "gap(0.75T,T) / gap(0.25T,0.5T) = " + g(gap_ratio) + ", wrap-around " + g(wrap) +
                        (gap_ratio > kGapRatio && !before_wrap ? " (warning only: past wrap-around)" : "")};
    return r;
}

// 10 -----------------------------------------------------------------------
Outcome resolvent() {
    constexpr double kMaxOverMedian = 10.0, kEpsStability = 0.25, kOracleTol = 1e-3, kBudget = 300.0;
    const auto t0 = std::chrono::steady_clock::now();
    // long box: periodic images of the pole sit far from the real axis
    const HamiltonianSpec spec(build_gaussian_well(-1.0, 1.0, GridSpec({131072}, {52428.8})));
    const auto eig = ground_state(spec);
    SolverOptions opts;
    const auto lam = default_lambda_grid(16, 6.0);
    const auto s2 = resolvent_bound_scan(spec, &eig, 4.1, lam, 1e-2, opts, 1);
    const auto s3 = resolvent_bound_scan(spec, &eig, 4.1, lam, 1e-3, opts, 1);
    const double ratio = s2.max_scaled / s2.median_scaled;
    const double change = std::abs(s3.max_scaled - s2.max_scaled) / s2.max_scaled;

    // dense oracle, tests/oracles/dense_1d.py resolvent
    const HamiltonianSpec small(build_gaussian_well(-1.0, 1.0, GridSpec({256}, {51.2})));
    const auto seig = ground_state(small);
    const std::vector<double> ref{0.369449192311626, 0.321327187882986, 0.285901222492863,
                                  0.583082462351922, 0.413996568543441, 0.103263615494995,
                                  0.0606987744606646, 0.187572316702924, 0.219750214306165,
                                  0.0677593384450798, 0.0427032833704283, 0.142701287965797,
                                  0.118927055376893, 0.0436596705222057, 0.0351869635516724,
                                  0.145686230993342};
    SolverOptions tight;
    tight.tol_rel = 1e-10;
    const auto so = resolvent_bound_scan(small, &seig, 4.1, lam, 1e-2, tight, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(so.rows[i].norm - ref[i]) / ref[i]);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {s2.all_converged && s3.all_converged && ratio <= kMaxOverMedian && change <= kEpsStability &&
                worst <= kOracleTol && secs < kBudget,
            "max/median = " + g(ratio) + " (eps 1e-2), max change eps 1e-2 -> 1e-3 = " + g(change) +
                ", dense rel. error = " + e(worst) + ", " + g(secs) + " s"};
}

// 11 -----------------------------------------------------------------------
Outcome norm_equivalence() {
    constexpr int kTrials = 64;
    const auto spec = sech2_512();
    bool rule_ok = true;
    std::string detail;
    for (double p : {2.0, 18.0 / 5.0}) {
        const auto r = norm_equivalence_check(spec, p, kTrials, 1);
        rule_ok = rule_ok && r.passed;
        detail += "K rule p=" + g(p) + ": r in [" + g(r.r_min) + ", " + g(r.r_max) + "]; ";
    }
    // negative control: K = 0 on -30 sech^2 (six bound states, a zero-energy
    // half-bound state)
    const HamiltonianSpec deep(build_sech2_well(-30.0, 1.0, GridSpec({512}, {40.0})), 1.0, 0.0);
    bool control_fails = true;
    for (double p : {2.0, 18.0 / 5.0}) {
        const auto r = norm_equivalence_check(deep, p, kTrials, 1);
        control_fails = control_fails && !r.passed;
        detail += "K=0 deep well p=" + g(p) + ": r in [" + g(r.r_min) + ", " + g(r.r_max) + "]" +
                  (r.passed ? " (check passes)" : " (check fails)") + "; ";
    }
    detail.resize(detail.size() - 2);
    return {rule_ok && control_fails, detail};
}

// 12 -----------------------------------------------------------------------
Outcome admissibility() {
    bool ok = is_admissible(Rational::infinity(), Rational{2, 1}) && is_admissible(Rational{3, 1}, Rational{18, 5}) &&
              !is_admissible(Rational{2, 1}, Rational{6, 1});
    std::mt19937_64 rng(2024);
    int cases = 0;
    for (int i = 0; i < 100000; ++i) {
        const std::int64_t pd = std::uniform_int_distribution<std::int64_t>(1, 1'000'000)(rng);
        const std::int64_t pn = std::uniform_int_distribution<std::int64_t>(2 * pd, 6 * pd - 1)(rng);
        const std::int64_t qd = 3 * pn - 6 * pd;
        const Rational q = qd == 0 ? Rational::infinity() : Rational{4 * pn, qd};
        ok = ok && is_admissible(q, Rational{pn, pd});
        if (qd != 0) ok = ok && !is_admissible(Rational{4 * pn + 1, qd}, Rational{pn, pd});
        ok = ok && !is_admissible(q, Rational{6 * pd + 1, pd});
        ++cases;
    }
    return {ok, "named pairs and " + std::to_string(cases) + " random points on and beside the line"};
}

// 13 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path root = MAGNLS_TEST_TMP;
    int files = 0;
    bool same = true;
    for (const std::string sub : {"bound-family", "norm-equivalence", "evolve", "strichartz-ratio"}) {
        std::vector<fs::path> dirs;
        for (const char* tag : {"a", "b"}) {
            auto t = IniTable::parse(
                "[grid]\ndim = 1\nsizes = 256\nlengths = 40\n[potential]\nkind = sech2_well\n"
                "[solver]\ntrials = 16\nsources = 3\nstrichartz_t = 0.5\n[evolution]\nt_final = 0.2\n"
                "[output]\nseed = 1234\n");
            dirs.push_back(root / (sub + "_" + tag));
            fs::remove_all(dirs.back());
            t.set("output", "directory", dirs.back().string());
            std::ostringstream log;
            if (run(sub, build_config(t), log) != exit_pass) same = false;
        }
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            same = same && slurp(entry.path()) == slurp(dirs[1] / entry.path().filename());
        }
    }
    return {same && files > 0, std::to_string(files) + " CSV files compared byte for byte"};
}

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& ex) {
        o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

}  // namespace

int main() {
    report(1, "linear ground state", linear_ground_state);
    report(2, "gauge covariance", gauge_covariance);
    FamilyResult fam;
    bool fam_ok = true;
    std::string fam_err;
    try {
        fam = family_checks();
    } catch (const std::exception& ex) {
        fam_ok = false;
        fam_err = ex.what();
    }
    report(3, "bound-state scalings", [&] { return fam_ok ? fam.scalings : Outcome{false, fam_err}; });
    report(4, "exponential decay", [&] { return fam_ok ? fam.decay : Outcome{false, fam_err}; });
    report(5, "bound-state orbit", bound_state_orbit);
    SuiteResult suite;
    bool suite_ok = true;
    std::string suite_err;
    try {
        suite = stability_suite();
    } catch (const std::exception& ex) {
        suite_ok = false;
        suite_err = ex.what();
    }
    report(6, "best decomposition", [&] { return suite_ok ? suite.decomposition : Outcome{false, suite_err}; });
    report(7, "modulation bound", [&] { return suite_ok ? suite.modulation : Outcome{false, suite_err}; });
    report(8, "adjusted z convergence", [&] { return suite_ok ? suite.adjusted : Outcome{false, suite_err}; });
    report(9, "scattering diagnostic", [&] { return suite_ok ? suite.scattering : Outcome{false, suite_err}; });
    report(10, "weighted resolvent scan", resolvent);
    report(11, "norm equivalence", norm_equivalence);
    report(12, "admissibility", admissibility);
    report(13, "determinism", determinism);
    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
