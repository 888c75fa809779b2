#include "magnls/runner.hpp"

#include "magnls/analysis.hpp"
#include "magnls/bound_states.hpp"
#include "magnls/errors.hpp"
#include "magnls/evolution.hpp"
#include "magnls/modulation.hpp"
#include "magnls/potentials.hpp"
#include "magnls/spectrum.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <ostream>

#ifndef MAGNLS_VERSION
#define MAGNLS_VERSION "unknown"
#endif

namespace magnls {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {
        "validate-potentials", "ground-state", "bound-state",   "bound-family",
        "evolve",              "linear-evolve", "stability-run", "resolvent-scan",
        "norm-equivalence",    "strichartz-ratio"};
    return names;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<Cell> row) {
    if (row.size() != header_.size())
        throw StructuralError("CsvTable: row has " + std::to_string(row.size()) +
                              " cells, header has " + std::to_string(header_.size()));
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::visit(
                [&out](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>)
                        out += format_double(v);
                    else if constexpr (std::is_same_v<T, long long>)
                        out += std::to_string(v);
                    else
                        out += v;
                },
                row[i]);
        }
        out += '\n';
    }
    return out;
}

void CsvTable::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw StructuralError("cannot write " + path);
    const std::string s = str();
    f.write(s.data(), std::streamsize(s.size()));
    if (!f) throw StructuralError("failed writing " + path);
}

namespace {

GridSpec build_grid(const ExperimentConfig& cfg) {
    return GridSpec(cfg.grid.sizes, cfg.grid.lengths, true);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

HamiltonianSpec build_hamiltonian(const ExperimentConfig& cfg) {
    const GridSpec grid = build_grid(cfg);
    const auto& p = cfg.potential;
    PotentialPair pot;
    if (p.kind == "gaussian_well")
        pot = build_gaussian_well(-p.depth, p.width, grid);
    else if (p.kind == "sech2_well")
        pot = build_sech2_well(-p.depth, p.width, grid);
    else if (p.kind == "file") {
        ComplexField V = read_snapshot(p.v_file);
        if (!(V.grid() == grid))
            throw ConfigError("potential.v_file grid does not match the [grid] section");
        pot = PotentialPair::make(VectorField::zeros(grid), std::move(V));
    } else
        pot = PotentialPair::make(VectorField::zeros(grid), ComplexField(grid));

    if (p.magnetic == "loop") {
        pot = with_vector_potential(
            pot, build_localized_loop_field(p.magnetic_amplitude, p.loop_radius, p.magnetic_width, grid));
    } else if (p.magnetic == "file") {
        std::vector<ComplexField> comps;
        for (const auto& path : p.a_files) {
            ComplexField a = read_snapshot(path);
            if (!(a.grid() == grid))
                throw ConfigError("potential.a_files grid does not match the [grid] section");
            comps.push_back(std::move(a));
        }
        pot = with_vector_potential(pot, VectorField(std::move(comps)));
    }
    HamiltonianSpec spec(std::move(pot), p.c_pos, p.K);
    if (p.magnetic == "gauge")
        spec = gauge_transform(spec, gaussian_profile(p.magnetic_amplitude, p.magnetic_width, grid));
    return spec;
}

namespace {

struct Gate {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

class Run {
public:
    Run(const ExperimentConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log) {
        dir_ = cfg.output.directory;
        fs::create_directories(dir_);
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    std::ostream& log() { return log_; }

    void csv(const std::string& name, const CsvTable& t) {
        t.write((dir_ / name).string());
        add_file(name);
    }
    void snapshot(const std::string& name, const ComplexField& f) {
        write_snapshot((dir_ / name).string(), f);
        add_file(name);
    }
    void gate(const std::string& name, bool passed, double value, double threshold,
              const std::string& note = "") {
        gates_.push_back({name, passed, value, threshold, note});
        log_ << (passed ? "  gate ok   " : "  gate FAIL ") << name << " = " << format_double(value)
             << " (threshold " << format_double(threshold) << ")\n";
    }
    void warn(const std::string& w) {
        warnings_.push_back(w);
        log_ << "  warning: " << w << '\n';
    }
    void stage(const std::string& name, const std::string& status, const std::string& detail = "") {
        stages_.push_back({{"name", name}, {"status", status}, {"detail", detail}});
    }
    bool all_gates_passed() const {
        for (const auto& g : gates_)
            if (!g.passed) return false;
        return true;
    }

    void write_manifest(const std::string& subcommand, int exit_code, double seconds,
                        const std::string& started) {
        json m;
        m["tool"] = "magnls";
        m["version"] = MAGNLS_VERSION;
        m["platform"] = platform_note();
        m["subcommand"] = subcommand;
        m["started_utc"] = started;
        m["wall_clock_seconds"] = seconds;
        m["exit_code"] = exit_code;
        json conf = json::object();
        for (const auto& [k, v] : cfg_.echo) conf[k] = v;
        m["config"] = conf;
        m["stages"] = stages_;
        json gates = json::array();
        for (const auto& g : gates_)
            gates.push_back({{"name", g.name},
                             {"passed", g.passed},
                             {"value", g.value},
                             {"threshold", g.threshold},
                             {"note", g.note}});
        m["gates"] = gates;
        m["warnings"] = warnings_;
        auto files = files_;
        files.push_back("manifest.json");
        m["files"] = files;
        const fs::path tmp = dir_ / "manifest.json.tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f << m.dump(2) << '\n';
            if (!f) throw StructuralError("failed writing manifest");
        }
        fs::rename(tmp, dir_ / "manifest.json");
    }

private:
    static std::string platform_note() {
        std::string s;
#if defined(__linux__)
        s = "linux";
#elif defined(__APPLE__)
        s = "macos";
#else
        s = "unknown-os";
#endif
#if defined(__VERSION__)
        s += ", compiler " + std::string(__VERSION__);
#endif
        return s;
    }

    void add_file(const std::string& name) {
        for (const auto& f : files_)
            if (f == name) return;
        files_.push_back(name);
    }

    const ExperimentConfig& cfg_;
    std::ostream& log_;
    fs::path dir_;
    std::vector<std::string> files_;
    json stages_ = json::array();
    std::vector<Gate> gates_;
    std::vector<std::string> warnings_;
};

SolverOptions solver_options(const ExperimentConfig& cfg) {
    SolverOptions o;
    o.tol_rel = cfg.solver.tol_rel;
    o.max_iter = cfg.solver.max_iter;
    o.resolvent_eps = cfg.solver.resolvent_eps;
    return o;
}

EigenOptions eigen_options(const ExperimentConfig& cfg) {
    EigenOptions o;
    o.seed = derive_seed(cfg.output.seed, 0);
    return o;
}

BoundStateOptions bound_options(const ExperimentConfig& cfg) {
    BoundStateOptions o;
    o.nonlinearity = cfg.nonlinearity;
    return o;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    }
    return sxy / sxx;
}

// Subcommands -------------------------------------------------------------

void validate_potentials(Run& run, const HamiltonianSpec& spec) {
    const auto rep = validate(spec.potentials());
    CsvTable t({"check", "status", "value"});
    t.add({std::string("self_adjointness"), to_string(rep.self_adjointness), 0.0});
    t.add({std::string("pointwise_decay_A"), to_string(rep.pointwise_decay_A), rep.alpha_A});
    t.add({std::string("pointwise_decay_V"), to_string(rep.pointwise_decay_V), rep.alpha_V});
    t.add({std::string("tail_decay"), to_string(rep.tail_decay), 0.0});
    t.add({std::string("fractional_sobolev"), to_string(rep.fractional_sobolev), 0.0});
    t.add({std::string("zero_resonance"), to_string(rep.zero_resonance), 0.0});
    t.add({std::string("k_rule"), std::string(spec.k_rule_satisfied() ? "pass" : "fail"), spec.K()});
    run.csv("validation.csv", t);
    CsvTable tails({"radius", "a_split_norm", "v_minus_split_norm"});
    for (const auto& r : rep.tails) tails.add({r.radius, r.a_split_norm, r.v_minus_split_norm});
    run.csv("tails.csv", tails);
    for (const auto& n : rep.notes) run.warn(n);
    run.gate("potential_validation", rep.passed(), rep.passed() ? 1.0 : 0.0, 1.0);
}

EigenPair ground_state_stage(Run& run, const HamiltonianSpec& spec, bool write) {
    const auto eig = ground_state(spec, eigen_options(run.cfg()));
    run.log() << "  e0 = " << format_double(eig.e0) << ", residual " << format_double(eig.residual)
              << '\n';
    if (write) {
        const auto scan = low_spectrum_scan(spec, 4, 1e-6, eigen_options(run.cfg()));
        CsvTable gs({"e0", "residual", "gap", "negative_count", "single_bound_state", "K"});
        gs.add({eig.e0, eig.residual, eig.gap, (long long)scan.negative_count,
                (long long)(scan.single_bound_state ? 1 : 0), spec.K()});
        run.csv("ground_state.csv", gs);
        CsvTable sp({"index", "eigenvalue", "residual"});
        for (std::size_t i = 0; i < scan.lines.size(); ++i)
            sp.add({(long long)i, scan.lines[i].eigenvalue, scan.lines[i].residual});
        run.csv("spectrum.csv", sp);
        run.snapshot("phi0.fld", eig.phi0);
        run.gate("single_bound_state", scan.single_bound_state, double(scan.negative_count), 1.0);
        run.gate("ground_state_residual", eig.residual <= 1e-9, eig.residual, 1e-9);
    }
    return eig;
}

std::vector<std::string> family_header() {
    return {"z_re", "z_im", "E", "e_prime", "q_h2", "beta", "iterations", "residual"};
}

void bound_state_cmd(Run& run, const HamiltonianSpec& spec, bool family) {
    const auto& cfg = run.cfg();
    const auto eig = ground_state_stage(run, spec, false);
    const auto opts = bound_options(cfg);
    std::vector<cplx> zs;
    if (family) {
        const cplx phase = std::abs(cplx(cfg.modulation.z_re, cfg.modulation.z_im)) > 0.0
                               ? std::polar(1.0, std::arg(cplx(cfg.modulation.z_re, cfg.modulation.z_im)))
                               : cplx(1.0);
        for (double r : cfg.modulation.z_list) zs.push_back(r * phase);
    } else {
        zs.push_back({cfg.modulation.z_re, cfg.modulation.z_im});
    }

    CsvTable t(family_header());
    std::vector<double> az, qn, ep;
    bool residual_ok = true, decay_ok = true;
    double worst_res = 0.0, worst_r2 = 1.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const auto bs = solve_bound_state(spec, eig, zs[i], opts);
        const auto fit = decay_fit(bs);
        const double q_h2 = norm_h2(bs.q);
        t.add({zs[i].real(), zs[i].imag(), bs.E, bs.e_prime, q_h2, fit.beta,
               (long long)bs.iterations, bs.residual});
        const double rel = bs.residual / std::max(norm_l2(bs.Q), std::abs(zs[i]));
        worst_res = std::max(worst_res, rel);
        worst_r2 = std::min(worst_r2, fit.r2);
        residual_ok = residual_ok && rel <= 1e-9;
        decay_ok = decay_ok && fit.beta > 0.0 && fit.r2 >= 0.98;
        if (std::abs(zs[i]) > 0.0) {
            az.push_back(std::abs(zs[i]));
            qn.push_back(q_h2);
            ep.push_back(std::abs(bs.e_prime));
        }
        char name[32];
        std::snprintf(name, sizeof name, family ? "Q_%03zu.fld" : "Q.fld", i);
        run.snapshot(name, bs.Q);
    }
    run.csv(family ? "bound_family.csv" : "bound_state.csv", t);
    run.gate("bound_state_residual", residual_ok, worst_res, 1e-9);
    run.gate("decay_fit_r2", decay_ok, worst_r2, 0.98);
    if (family && az.size() >= 2) {
        const double sq = loglog_slope(az, qn), se = loglog_slope(az, ep);
        CsvTable s({"q_h2_slope", "e_prime_slope", "max_relative_residual", "min_r2"});
        s.add({sq, se, worst_res, worst_r2});
        run.csv("family_summary.csv", s);
        run.gate("q_h2_slope", std::abs(sq - 3.0) <= 0.3, sq, 3.0);
        run.gate("e_prime_slope", std::abs(se - 2.0) <= 0.3, se, 2.0);
    }
}

ComplexField initial_state(Run& run, const HamiltonianSpec& spec, double& spread) {
    const auto& cfg = run.cfg();
    const auto& grid = spec.grid();
    if (cfg.evolution.initial == "gaussian") {
        spread = cfg.evolution.initial_width;
        return gaussian_profile(cfg.evolution.initial_amplitude, cfg.evolution.initial_width, grid);
    }
    const auto eig = ground_state_stage(run, spec, false);
    spread = 1.0 / std::sqrt(-eig.e0);
    const auto bs = solve_bound_state(spec, eig, {cfg.modulation.z_re, cfg.modulation.z_im},
                                      bound_options(cfg));
    return bs.Q;
}

void evolve_cmd(Run& run, const HamiltonianSpec& spec, bool nonlinear) {
    const auto& cfg = run.cfg();
    double spread = 1.0;
    const ComplexField psi0 = initial_state(run, spec, spread);
    const double wrap = wrap_around_time(spec.grid(), spread);
    if (cfg.evolution.t_final > wrap)
        run.warn("t_final " + format_double(cfg.evolution.t_final) +
                 " exceeds the wrap-around estimate " + format_double(wrap));
    EvolveConfig ec;
    ec.dt = cfg.evolution.dt;
    ec.t_final = cfg.evolution.t_final;
    ec.snapshot_stride = cfg.evolution.snapshot_stride;
    ec.conserve_tol = cfg.evolution.conserve_tol;
    ec.nonlinearity = cfg.nonlinearity;
    ec.nonlinear = nonlinear;
    const auto tr = evolve(spec, psi0, ec);

    CsvTable t({"t", "mass", "energy", "psi_h1"});
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        t.add({tr.times[i], tr.mass[i], tr.energy[i], tr.psi_h1[i]});
    run.csv("timeseries.csv", t);
    if (cfg.evolution.write_snapshots) {
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "snap_%08lld.fld",
                          (long long)std::llround(tr.times[i] / ec.dt));
            run.snapshot(name, tr.snapshots[i]);
        }
    }
    run.snapshot("final.fld", tr.final_state);
    run.gate("mass_drift", tr.max_mass_drift <= ec.conserve_tol, tr.max_mass_drift, ec.conserve_tol);
    run.gate("energy_drift", tr.max_energy_drift <= 1e-5, tr.max_energy_drift, 1e-5);
}

void stability_cmd(Run& run, const HamiltonianSpec& spec) {
    const auto& cfg = run.cfg();
    const auto& grid = spec.grid();
    const auto eig = ground_state_stage(run, spec, false);
    const cplx z0(cfg.modulation.z_re, cfg.modulation.z_im);
    const auto bopts = bound_options(cfg);
    const auto bs = solve_bound_state(spec, eig, z0, bopts);
    if (cfg.evolution.snapshot_stride * cfg.evolution.dt > 0.1 + 1e-12)
        throw ConfigError("evolution.snapshot_stride * evolution.dt must not exceed 0.1 for stability-run");
    const double wrap = wrap_around_time(grid, cfg.modulation.perturbation_width);
    const bool before_wrap = cfg.evolution.t_final <= wrap;
    if (!before_wrap)
        run.warn("t_final " + format_double(cfg.evolution.t_final) +
                 " exceeds the wrap-around estimate " + format_double(wrap));

    EvolveConfig ec;
    ec.dt = cfg.evolution.dt;
    ec.t_final = cfg.evolution.t_final;
    ec.snapshot_stride = cfg.evolution.snapshot_stride;
    ec.conserve_tol = cfg.evolution.conserve_tol;
    ec.nonlinearity = cfg.nonlinearity;
    TrackOptions to;
    to.decompose.bound = bopts;
    to.decompose.sigma = cfg.modulation.sigma;
    to.pullback_dt = cfg.evolution.dt;

    CsvTable summary({"amplitude", "psi0_h1", "L1_mod_resid", "X_norm_eta", "final_scattering_gap",
                      "perturbation_h1", "early_scattering_gap", "adjusted_tv_first",
                      "adjusted_tv_second", "max_ortho_ratio", "max_newton_iters", "truncated"});
    std::vector<double> sizes, l1s;
    bool ortho_ok = true, pairing_ok = true, orbit_ok = true, complete = true;
    double worst_ortho = 0.0, worst_pairing = 0.0;
    for (std::size_t ai = 0; ai < cfg.modulation.amplitudes.size(); ++ai) {
        const double a = cfg.modulation.amplitudes[ai];
        run.log() << "  amplitude " << format_double(a) << '\n';
        const ComplexField pert = gaussian_profile(a, cfg.modulation.perturbation_width, grid);
        const ComplexField psi0 = bs.Q + pert;
        const auto tr = evolve(spec, psi0, ec);
        const auto rep = track(spec, eig, tr, to);

        CsvTable t({"t", "z_re", "z_im", "E", "mod_resid_abs", "eta_h1", "eta_weighted_h1",
                    "ortho_resid", "eta_Q_pairing"});
        double max_ratio = 0.0;
        int max_newton = 0;
        for (std::size_t i = 0; i < rep.times.size(); ++i) {
            t.add({rep.times[i], rep.z[i].real(), rep.z[i].imag(), rep.E[i], rep.mod_resid[i],
                   rep.eta_h1[i], rep.eta_weighted_h1[i], rep.ortho_resid[i], rep.eta_Q_pairing[i]});
            const double ratio = rep.eta_h1[i] > 0.0 ? rep.ortho_resid[i] / rep.eta_h1[i] : 0.0;
            max_ratio = std::max(max_ratio, ratio);
            max_newton = std::max(max_newton, rep.newton_iters[i]);
            const double pr = std::abs(rep.eta_Q_pairing[i]) /
                              std::max(rep.eta_l2[i] * rep.Q_l2[i], 1e-300);
            worst_pairing = std::max(worst_pairing, pr);
            pairing_ok = pairing_ok && std::abs(rep.eta_Q_pairing[i]) <= 1e-8 * rep.eta_l2[i] * rep.Q_l2[i];
            const double ratio_z = std::abs(rep.z[i]) / std::abs(rep.z.front());
            orbit_ok = orbit_ok && ratio_z >= 0.5 && ratio_z <= 2.0;
        }
        worst_ortho = std::max(worst_ortho, max_ratio);
        ortho_ok = ortho_ok && max_ratio <= 1e-10;
        complete = complete && !rep.truncated;
        char name[48];
        std::snprintf(name, sizeof name, "stability_a%03zu.csv", ai);
        run.csv(name, t);

        const double pert_h1 = norm_h1(pert);
        const double early = rep.scattering_gaps.size() == 3 ? rep.scattering_gaps[0] : NAN;
        const double late = rep.scattering_gaps.size() == 3 ? rep.scattering_gaps[2] : NAN;
        summary.add({a, norm_h1(psi0), rep.L1_mod_resid, rep.x_norm, late, pert_h1, early,
                     rep.adjusted_tv_first, rep.adjusted_tv_second, max_ratio,
                     (long long)max_newton, (long long)(rep.truncated ? 1 : 0)});
        sizes.push_back(pert_h1);
        l1s.push_back(rep.L1_mod_resid);

        if (a == cfg.modulation.reference_amplitude) {
            CsvTable gram({"j", "k", "value"});
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) gram.add({(long long)(j + 1), (long long)(k + 1), rep.gram[j][k]});
            run.csv("gram.csv", gram);
            const double tv_ratio = rep.adjusted_tv_first > 0.0
                                        ? rep.adjusted_tv_second / rep.adjusted_tv_first
                                        : 0.0;
            run.gate("adjusted_z_variation_ratio", tv_ratio <= 0.25, tv_ratio, 0.25);
            const double gap_ratio = early > 0.0 ? late / early : 0.0;
            const bool gap_ok = gap_ratio <= 0.5;
            if (gap_ok || before_wrap)
                run.gate("scattering_gap_ratio", gap_ok, gap_ratio, 0.5,
                         "wrap-around estimate " + format_double(wrap));
            else
                run.warn("scattering gap ratio " + format_double(gap_ratio) +
                         " above 0.5 past the wrap-around estimate");
        }
    }
    run.csv("stability_summary.csv", summary);
    run.gate("tracking_complete", complete, complete ? 1.0 : 0.0, 1.0);
    run.gate("orthogonality_ratio", ortho_ok, worst_ortho, 1e-10);
    run.gate("eta_Q_pairing_ratio", pairing_ok, worst_pairing, 1e-8);
    run.gate("orbital_stability", orbit_ok, orbit_ok ? 1.0 : 0.0, 1.0);
    if (sizes.size() >= 2) {
        const double slope = loglog_slope(sizes, l1s);
        run.gate("modulation_slope", std::abs(slope - 2.0) <= 0.4, slope, 2.0);
    }
}

const EigenPair* optional_ground_state(Run& run, const HamiltonianSpec& spec, EigenPair& storage) {
    try {
        storage = ground_state(spec, eigen_options(run.cfg()));
        return &storage;
    } catch (const NoBoundState&) {
        run.warn("no bound state: scans run without the continuous-spectrum projection");
        return nullptr;
    }
}

void resolvent_cmd(Run& run, const HamiltonianSpec& spec) {
    const auto& cfg = run.cfg();
    EigenPair storage;
    const EigenPair* eig = optional_ground_state(run, spec, storage);
    const auto lambdas = default_lambda_grid(cfg.solver.lambda_count, cfg.solver.lambda_max);
    CsvTable t({"eps", "lambda", "norm", "scaled_norm", "power_iterations", "converged"});
    CsvTable s({"eps", "max_scaled", "median_scaled", "max_over_median"});
    std::vector<double> maxima;
    bool converged = true;
    for (double eps : cfg.solver.resolvent_eps) {
        const auto scan = resolvent_bound_scan(spec, eig, cfg.modulation.sigma, lambdas, eps,
                                               solver_options(cfg), derive_seed(cfg.output.seed, 1));
        for (const auto& r : scan.rows)
            t.add({eps, r.lambda, r.norm, r.scaled_norm, (long long)r.power_iterations,
                   (long long)(r.converged ? 1 : 0)});
        const double ratio = scan.median_scaled > 0.0 ? scan.max_scaled / scan.median_scaled : INFINITY;
        s.add({eps, scan.max_scaled, scan.median_scaled, ratio});
        maxima.push_back(scan.max_scaled);
        converged = converged && scan.all_converged;
        if (maxima.size() == 1) run.gate("resolvent_max_over_median", ratio <= 10.0, ratio, 10.0);
    }
    run.csv("resolvent_scan.csv", t);
    run.csv("resolvent_summary.csv", s);
    run.gate("resolvent_solves_converged", converged, converged ? 1.0 : 0.0, 1.0);
    if (maxima.size() >= 2) {
        const double change = std::abs(maxima.back() - maxima.front()) / maxima.front();
        run.gate("resolvent_eps_stability", change <= 0.25, change, 0.25);
    }
}

void norm_equivalence_cmd(Run& run, const HamiltonianSpec& spec) {
    const auto& cfg = run.cfg();
    CsvTable t({"p", "trial", "ratio"});
    CsvTable s({"p", "r_min", "r_max", "spread", "passed"});
    bool ok = true;
    std::uint64_t stream = 10;
    for (auto [num, den] : cfg.solver.p_list) {
        const double p = double(num) / double(den);
        const auto r = norm_equivalence_check(spec, p, cfg.solver.trials,
                                              derive_seed(cfg.output.seed, stream++));
        for (std::size_t i = 0; i < r.ratios.size(); ++i) t.add({p, (long long)i, r.ratios[i]});
        s.add({p, r.r_min, r.r_max, r.r_max / r.r_min, (long long)(r.passed ? 1 : 0)});
        ok = ok && r.passed;
        run.gate("norm_equivalence_p" + short_number(p), r.passed, r.r_max / r.r_min, 100.0,
                 "r_min " + format_double(r.r_min));
    }
    (void)ok;
    run.csv("norm_equivalence.csv", t);
    run.csv("norm_equivalence_summary.csv", s);
}

void strichartz_cmd(Run& run, const HamiltonianSpec& spec) {
    const auto& cfg = run.cfg();
    EigenPair storage;
    const EigenPair* eig = optional_ground_state(run, spec, storage);
    StrichartzOptions so;
    so.t_final = cfg.solver.strichartz_t;
    so.dt = cfg.evolution.dt;
    so.stride = std::max(1, int(std::llround(0.01 / cfg.evolution.dt)));
    so.sigma = cfg.modulation.sigma;
    CsvTable t({"mode", "q", "p", "source", "ratio"});
    CsvTable s({"mode", "q", "p", "min", "median", "max", "passed"});
    std::uint64_t stream = 20;
    for (auto [num, den] : cfg.solver.p_list) {
        // q from 2/q + 3/p = 3/2: q = 4 num / (3 num - 6 den)
        const std::int64_t qd = 3 * num - 6 * den;
        AdmissiblePair pair{qd == 0 ? Rational::infinity() : Rational{4 * num, qd}, Rational{num, den}};
        if (!is_admissible(pair)) {
            run.warn("p = " + std::to_string(num) + "/" + std::to_string(den) +
                     " has no admissible partner; skipped");
            continue;
        }
        for (auto mode : {StrichartzMode::homogeneous, StrichartzMode::inhomogeneous}) {
            const std::string mname = mode == StrichartzMode::homogeneous ? "homogeneous" : "inhomogeneous";
            const auto st = strichartz_ratio(spec, eig, pair, cfg.solver.sources, mode, so,
                                             derive_seed(cfg.output.seed, stream++));
            const double q = pair.q.value(), p = pair.p.value();
            for (std::size_t i = 0; i < st.ratios.size(); ++i)
                t.add({mname, q, p, (long long)i, st.ratios[i]});
            s.add({mname, q, p, st.min, st.median, st.max, (long long)(st.passed ? 1 : 0)});
            run.gate("strichartz_" + mname + "_q" + short_number(q) + "_p" + short_number(p),
                     st.passed, st.median > 0.0 ? st.max / st.median : 0.0, 10.0);
        }
    }
    run.csv("strichartz.csv", t);
    run.csv("strichartz_summary.csv", s);
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int run(const std::string& subcommand, const ExperimentConfig& cfg, std::ostream& log) {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end())
        throw ConfigError("unknown subcommand '" + subcommand + "'");

    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    Run r(cfg, log);
    log << "magnls " << subcommand << " -> " << cfg.output.directory << '\n';
    int code = exit_pass;
    try {
        const HamiltonianSpec spec = build_hamiltonian(cfg);
        r.stage("hamiltonian", "ok", spec.grid().describe());
        if (subcommand == "validate-potentials")
            validate_potentials(r, spec);
        else if (subcommand == "ground-state")
            ground_state_stage(r, spec, true);
        else if (subcommand == "bound-state")
            bound_state_cmd(r, spec, false);
        else if (subcommand == "bound-family")
            bound_state_cmd(r, spec, true);
        else if (subcommand == "evolve")
            evolve_cmd(r, spec, true);
        else if (subcommand == "linear-evolve")
            evolve_cmd(r, spec, false);
        else if (subcommand == "stability-run")
            stability_cmd(r, spec);
        else if (subcommand == "resolvent-scan")
            resolvent_cmd(r, spec);
        else if (subcommand == "norm-equivalence")
            norm_equivalence_cmd(r, spec);
        else if (subcommand == "strichartz-ratio")
            strichartz_cmd(r, spec);
        r.stage(subcommand, "ok");
        if (!r.all_gates_passed()) code = exit_gate_failure;
    } catch (const Error& e) {
        r.stage(subcommand, "error", e.what());
        log << "  error: " << e.what() << '\n';
        code = exit_error;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.write_manifest(subcommand, code, secs, started);
    log << "exit " << code << '\n';
    return code;
}

}  // namespace magnls
