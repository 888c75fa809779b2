#include "magnls/potentials.hpp"

#include "magnls/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magnls {

namespace {

constexpr double kImagTol = 1e-13;

ComplexField realified(ComplexField f, const char* what) {
    if (!f.all_finite()) throw PreconditionError(std::string(what) + " has non-finite samples");
    if (f.max_imag() > kImagTol)
        throw PreconditionError(std::string(what) + " must be real valued (imaginary part " +
                                std::to_string(f.max_imag()) + ")");
    for (auto& v : f.values()) v = v.real();
    return f;
}

}  // namespace

PotentialPair PotentialPair::make(VectorField A, ComplexField V, double decay_eps,
                                  double lq_exponent) {
    if (A.dim() != V.grid().dim())
        throw StructuralError("vector potential needs one component per axis");
    for (int i = 0; i < A.dim(); ++i) {
        require_same_grid(A[i].grid(), V.grid(), "PotentialPair");
        A[i] = realified(std::move(A[i]), "vector potential");
    }
    if (!(decay_eps > 0.0)) throw PreconditionError("decay_eps must be positive");
    if (!(lq_exponent > 3.0)) throw PreconditionError("lq_exponent must exceed 3");
    PotentialPair p;
    p.V = realified(std::move(V), "scalar potential");
    p.div_A = divergence(A);
    for (auto& v : p.div_A.values()) v = v.real();
    p.A = std::move(A);
    p.decay_eps = decay_eps;
    p.lq_exponent = lq_exponent;
    return p;
}

PotentialPair build_gaussian_well(double depth, double width, const GridSpec& grid) {
    if (!(width > 0.0)) throw PreconditionError("well width must be positive");
    if (width > 0.1 * grid.min_length())
        throw PreconditionError("well width " + std::to_string(width) +
                                " too large for box length " + std::to_string(grid.min_length()));
    auto V = ComplexField::sample(grid, [&](const Point& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return depth * std::exp(-r2 / (width * width));
    });
    return PotentialPair::make(VectorField::zeros(grid), std::move(V));
}

PotentialPair build_sech2_well(double depth, double width, const GridSpec& grid) {
    if (!(width > 0.0)) throw PreconditionError("well width must be positive");
    if (width > 0.1 * grid.min_length())
        throw PreconditionError("well width too large for the box");
    auto V = ComplexField::sample(grid, [&](const Point& x) {
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        const double s = 1.0 / std::cosh(r / width);
        return depth * s * s;
    });
    return PotentialPair::make(VectorField::zeros(grid), std::move(V));
}

ComplexField gaussian_profile(double amplitude, double width, const GridSpec& grid) {
    if (!(width > 0.0)) throw PreconditionError("profile width must be positive");
    return ComplexField::sample(grid, [&](const Point& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return amplitude * std::exp(-r2 / (width * width));
    });
}

VectorField build_gauge_field(const ComplexField& chi) {
    if (chi.max_imag() > kImagTol) throw PreconditionError("gauge function must be real");
    auto A = gradient(chi.real_part());
    for (auto& c : A.components)
        for (auto& v : c.values()) v = v.real();
    return A;
}

VectorField build_localized_loop_field(double amplitude, double radius, double width,
                                       const GridSpec& grid) {
    if (grid.dim() < 2) throw PreconditionError("loop field needs dim >= 2");
    if (!(radius > 0.0) || !(width > 0.0) || !(amplitude >= 0.0))
        throw PreconditionError("loop field parameters must be positive");
    VectorField A = VectorField::zeros(grid);
    for (std::size_t j = 0; j < grid.total(); ++j) {
        const auto x = grid.point(j);
        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        const double env = amplitude / radius * std::exp(-r2 / (width * width));
        A[0][j] = -x[1] * env;
        A[1][j] = x[0] * env;
    }
    return A;
}

PotentialPair with_vector_potential(const PotentialPair& p, VectorField A) {
    return PotentialPair::make(std::move(A), p.V, p.decay_eps, p.lq_exponent);
}

// Validation ------------------------------------------------------------------

std::string to_string(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::warn: return "warn";
        case Status::fail: return "fail";
        case Status::not_checked: return "not_checked";
    }
    return "unknown";
}

bool ValidationReport::passed() const {
    for (auto s : {self_adjointness, pointwise_decay_A, pointwise_decay_V, tail_decay})
        if (s == Status::fail) return false;
    return true;
}

double split_norm(const ComplexField& f, double q, const std::vector<bool>& mask) {
    const double dv = f.grid().cell_volume();
    double sup = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (mask[j]) sup = std::max(sup, std::abs(f[j]));
    if (sup == 0.0) return 0.0;
    double best = sup;
    for (int i = 0; i < 32; ++i) {
        const double tau = sup * std::pow(10.0, -16.0 + 16.0 * i / 31.0);
        double s = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double a = std::abs(f[j]);
            if (mask[j] && a > tau) s += std::pow(a, q);
        }
        best = std::min(best, std::pow(s * dv, 1.0 / q) + tau);
    }
    return best;
}

double fit_power_decay(const ComplexField& f) {
    const auto& grid = f.grid();
    const double rmin = 0.25 * grid.min_length();
    const double rmax = 0.5 * grid.min_length();
    constexpr int kShells = 24;
    std::vector<double> shell_max(kShells, 0.0);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const auto x = grid.point(j);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r < rmin || r >= rmax) continue;
        const int s = std::min(kShells - 1, int((r - rmin) / (rmax - rmin) * kShells));
        shell_max[s] = std::max(shell_max[s], std::abs(f[j]));
    }
    std::vector<double> xs, ys;
    for (int s = 0; s < kShells; ++s) {
        if (!(shell_max[s] > std::numeric_limits<double>::min())) continue;
        const double r = rmin + (s + 0.5) * (rmax - rmin) / kShells;
        xs.push_back(std::log(std::sqrt(1.0 + r * r)));
        ys.push_back(std::log(shell_max[s]));
    }
    if (xs.size() < 3) return std::numeric_limits<double>::infinity();
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

ValidationReport validate(const PotentialPair& p) {
    ValidationReport r;
    const auto& grid = p.grid();

    const bool real = p.A.max_imag() <= kImagTol && p.V.max_imag() <= kImagTol &&
                      p.div_A.max_imag() <= kImagTol;
    bool finite = p.V.all_finite() && p.div_A.all_finite();
    for (const auto& c : p.A.components) finite = finite && c.all_finite();
    r.self_adjointness = (real && finite && p.lq_exponent > 3.0) ? Status::pass : Status::fail;

    const double need = 1.0 + p.decay_eps - 0.1;
    const auto absA = p.A.magnitude();
    r.alpha_A = fit_power_decay(absA);
    r.pointwise_decay_A = r.alpha_A >= need ? Status::pass : Status::fail;

    ComplexField xV = pointwise(japanese_weight(grid, 1.0), p.V);
    r.alpha_V = fit_power_decay(xV);
    r.pointwise_decay_V = r.alpha_V >= need ? Status::pass : Status::fail;

    ComplexField v_minus(grid);
    for (std::size_t j = 0; j < grid.total(); ++j) v_minus[j] = std::max(0.0, -p.V[j].real());

    const double L = grid.min_length();
    const auto radius = radius_field(grid);
    r.tail_decay = Status::pass;
    for (double R : {L / 8.0, L / 4.0, 3.0 * L / 8.0}) {
        std::vector<bool> mask(grid.total());
        for (std::size_t j = 0; j < grid.total(); ++j) mask[j] = radius[j].real() > R;
        TailRow row{R, split_norm(absA, p.lq_exponent, mask), split_norm(v_minus, 2.0, mask)};
        if (!r.tails.empty()) {
            const auto& prev = r.tails.back();
            const bool a_ok = row.a_split_norm < prev.a_split_norm || prev.a_split_norm == 0.0;
            const bool v_ok =
                row.v_minus_split_norm < prev.v_minus_split_norm || prev.v_minus_split_norm == 0.0;
            if (!a_ok || !v_ok) r.tail_decay = Status::fail;
        }
        r.tails.push_back(row);
    }

    r.notes.push_back("fractional Sobolev condition on <x>^(1+eps') A is not checked");
    r.notes.push_back("zero-energy resonance condition is not checked on the grid");
    return r;
}

}  // namespace magnls
