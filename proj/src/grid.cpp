#include "magnls/grid.hpp"

#include "magnls/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace magnls {

GridSpec::GridSpec(std::vector<std::size_t> sizes, std::vector<double> lengths, bool centered)
    : centered_(centered) {
    if (sizes.empty() || sizes.size() > 3)
        throw StructuralError("grid dimension must be 1, 2 or 3");
    if (lengths.size() != sizes.size())
        throw StructuralError("grid needs one box length per axis");
    dim_ = int(sizes.size());
    for (int i = 0; i < dim_; ++i) {
        if (sizes[i] < 8 || !std::has_single_bit(sizes[i]))
            throw StructuralError("grid size on axis " + std::to_string(i) +
                                  " must be a power of two >= 8, got " + std::to_string(sizes[i]));
        if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i]))
            throw StructuralError("box length on axis " + std::to_string(i) + " must be positive");
        sizes_[i] = sizes[i];
        lengths_[i] = lengths[i];
    }
}

GridSpec GridSpec::cube(int dim, std::size_t n, double length) {
    if (dim < 1 || dim > 3) throw StructuralError("grid dimension must be 1, 2 or 3");
    return GridSpec(std::vector<std::size_t>(std::size_t(dim), n),
                    std::vector<double>(std::size_t(dim), length));
}

std::size_t GridSpec::total() const noexcept {
    if (dim_ == 0) return 0;
    return sizes_[0] * sizes_[1] * sizes_[2];
}

double GridSpec::min_spacing() const noexcept {
    double h = spacing(0);
    for (int i = 1; i < dim_; ++i) h = std::min(h, spacing(i));
    return h;
}

double GridSpec::cell_volume() const noexcept {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) v *= spacing(i);
    return v;
}

double GridSpec::volume() const noexcept {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) v *= lengths_[i];
    return v;
}

double GridSpec::min_length() const noexcept {
    double l = lengths_[0];
    for (int i = 1; i < dim_; ++i) l = std::min(l, lengths_[i]);
    return l;
}

double GridSpec::coordinate(int axis, std::size_t j) const noexcept {
    const double x = double(j) * spacing(axis);
    return centered_ ? x - 0.5 * lengths_[axis] : x;
}

double GridSpec::wavenumber(int axis, std::size_t m) const noexcept {
    const auto n = sizes_[axis];
    const double mm = m < n / 2 ? double(m) : double(m) - double(n);
    return 2.0 * std::numbers::pi * mm / lengths_[axis];
}

double GridSpec::max_wavenumber() const noexcept {
    double k = 0.0;
    for (int i = 0; i < dim_; ++i) k = std::max(k, std::numbers::pi / spacing(i));
    return k;
}

std::array<std::size_t, 3> GridSpec::unflatten(std::size_t flat) const noexcept {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int i = dim_ - 1; i >= 0; --i) {
        idx[i] = flat % sizes_[i];
        flat /= sizes_[i];
    }
    return idx;
}

Point GridSpec::point(std::size_t flat) const noexcept {
    const auto idx = unflatten(flat);
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) p[i] = coordinate(i, idx[i]);
    return p;
}

std::string GridSpec::describe() const {
    std::ostringstream os;
    os << dim_ << "D n=";
    for (int i = 0; i < dim_; ++i) os << (i ? "x" : "") << sizes_[i];
    os << " L=";
    for (int i = 0; i < dim_; ++i) os << (i ? "x" : "") << lengths_[i];
    return os.str();
}

bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
    return a.dim_ == b.dim_ && a.sizes_ == b.sizes_ && a.lengths_ == b.lengths_ &&
           a.centered_ == b.centered_;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!(a == b))
        throw StructuralError(std::string(where) + ": grid mismatch (" + a.describe() + " vs " +
                              b.describe() + ")");
}

// ComplexField ----------------------------------------------------------------

ComplexField::ComplexField(const GridSpec& grid, cplx fill)
    : grid_(grid), values_(grid.total(), fill) {}

ComplexField::ComplexField(const GridSpec& grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.total())
        throw StructuralError("field has " + std::to_string(values_.size()) +
                              " samples, grid needs " + std::to_string(grid_.total()));
}

bool ComplexField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double ComplexField::max_abs() const noexcept {
    double m = 0.0;
    for (auto v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ComplexField::max_imag() const noexcept {
    double m = 0.0;
    for (auto v : values_) m = std::max(m, std::abs(v.imag()));
    return m;
}

ComplexField ComplexField::conj() const {
    ComplexField out = *this;
    for (auto& v : out.values_) v = std::conj(v);
    return out;
}

ComplexField ComplexField::real_part() const {
    ComplexField out = *this;
    for (auto& v : out.values_) v = v.real();
    return out;
}

ComplexField ComplexField::abs() const {
    ComplexField out = *this;
    for (auto& v : out.values_) v = std::abs(v);
    return out;
}

ComplexField& ComplexField::operator+=(const ComplexField& other) {
    require_same_grid(grid_, other.grid_, "field addition");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
    return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& other) {
    require_same_grid(grid_, other.grid_, "field subtraction");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
    return *this;
}

ComplexField& ComplexField::operator*=(cplx s) noexcept {
    for (auto& v : values_) v *= s;
    return *this;
}

ComplexField& ComplexField::operator*=(const ComplexField& other) {
    require_same_grid(grid_, other.grid_, "pointwise product");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] *= other.values_[j];
    return *this;
}

ComplexField& ComplexField::axpy(cplx a, const ComplexField& x) {
    require_same_grid(grid_, x.grid_, "axpy");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += a * x.values_[j];
    return *this;
}

ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
ComplexField operator*(cplx s, ComplexField a) { return a *= s; }
ComplexField operator*(ComplexField a, cplx s) { return a *= s; }
ComplexField pointwise(ComplexField a, const ComplexField& b) { return a *= b; }

// VectorField -------------------------------------------------------------------

VectorField::VectorField(std::vector<ComplexField> comps) : components(std::move(comps)) {
    if (components.empty()) throw StructuralError("vector field needs at least one component");
    for (const auto& c : components) require_same_grid(components[0].grid(), c.grid(), "vector field");
    if (int(components.size()) != components[0].grid().dim())
        throw StructuralError("vector field needs one component per axis");
}

VectorField VectorField::zeros(const GridSpec& grid) {
    return VectorField(std::vector<ComplexField>(std::size_t(grid.dim()), ComplexField(grid)));
}

ComplexField VectorField::magnitude() const {
    ComplexField out(grid());
    for (std::size_t j = 0; j < out.size(); ++j) {
        double s = 0.0;
        for (const auto& c : components) s += std::norm(c[j]);
        out[j] = std::sqrt(s);
    }
    return out;
}

double VectorField::max_abs() const { return magnitude().max_abs(); }

double VectorField::max_imag() const {
    double m = 0.0;
    for (const auto& c : components) m = std::max(m, c.max_imag());
    return m;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    if (a.dim() != b.dim()) throw StructuralError("vector field dimension mismatch");
    VectorField out = a;
    for (int i = 0; i < a.dim(); ++i) out[i] += b[i];
    return out;
}

// FFT -------------------------------------------------------------------------

namespace detail {
namespace {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plans] : plans_) {
            fftw_destroy_plan(plans.forward);
            fftw_destroy_plan(plans.inverse);
        }
    }

    PlanPair get(const GridSpec& grid) {
        std::vector<int> dims;
        for (int i = 0; i < grid.dim(); ++i) dims.push_back(int(grid.size(i)));
        std::lock_guard lock(mutex_);
        auto it = plans_.find(dims);
        if (it != plans_.end()) return it->second;
        // FFTW_ESTIMATE keeps plan selection (and therefore results) fixed
        // from run to run; planning does not touch the scratch buffer.
        std::vector<cplx> scratch(grid.total());
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        PlanPair p;
        p.forward = fftw_plan_dft(grid.dim(), dims.data(), buf, buf, FFTW_FORWARD, flags);
        p.inverse = fftw_plan_dft(grid.dim(), dims.data(), buf, buf, FFTW_BACKWARD, flags);
        plans_.emplace(dims, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::vector<int>, PlanPair> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void fft_forward(const GridSpec& grid, std::span<cplx> data) {
    if (data.size() != grid.total()) throw StructuralError("fft: size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(grid).forward, buf, buf);
}

void fft_inverse(const GridSpec& grid, std::span<cplx> data) {
    if (data.size() != grid.total()) throw StructuralError("fft: size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(grid).inverse, buf, buf);
}

}  // namespace detail

namespace {

// (-1)^(m_0 + m_1 + m_2): the phase exp(i k.L/2) from centering the box.
double centering_sign(const GridSpec& grid, std::size_t flat) {
    if (!grid.centered()) return 1.0;
    const auto idx = grid.unflatten(flat);
    const std::size_t s = idx[0] + idx[1] + idx[2];
    return (s & 1u) ? -1.0 : 1.0;
}

}  // namespace

ComplexField dft(const ComplexField& f) {
    ComplexField out = f;
    detail::fft_forward(f.grid(), out.values());
    const double dv = f.grid().cell_volume();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= dv * centering_sign(f.grid(), j);
    return out;
}

ComplexField idft(const ComplexField& fhat) {
    ComplexField out = fhat;
    const double scale = 1.0 / fhat.grid().volume();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= scale * centering_sign(fhat.grid(), j);
    detail::fft_inverse(fhat.grid(), out.values());
    return out;
}

double norm_l2_frequency(const ComplexField& fhat) {
    double s = 0.0;
    for (auto v : fhat.values()) s += std::norm(v);
    return std::sqrt(s / fhat.grid().volume());
}

namespace {

Point wavevector(const GridSpec& grid, std::size_t flat) {
    const auto idx = grid.unflatten(flat);
    Point k{0.0, 0.0, 0.0};
    for (int i = 0; i < grid.dim(); ++i) k[i] = grid.wavenumber(i, idx[i]);
    return k;
}

// Wavenumber used by first derivatives: zero on the Nyquist bin.
double odd_wavenumber(const GridSpec& grid, int axis, std::size_t m) {
    return m == grid.size(axis) / 2 ? 0.0 : grid.wavenumber(axis, m);
}

}  // namespace

ComplexField apply_multiplier(const ComplexField& f, const std::function<cplx(const Point&)>& m) {
    const auto& grid = f.grid();
    ComplexField out = f;
    detail::fft_forward(grid, out.values());
    const double scale = 1.0 / double(grid.total());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= m(wavevector(grid, j)) * scale;
    detail::fft_inverse(grid, out.values());
    return out;
}

ComplexField derivative(const ComplexField& f, int axis) {
    const auto& grid = f.grid();
    if (axis < 0 || axis >= grid.dim()) throw StructuralError("derivative: axis out of range");
    ComplexField out = f;
    detail::fft_forward(grid, out.values());
    const double scale = 1.0 / double(grid.total());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto idx = grid.unflatten(j);
        out[j] *= cplx(0.0, odd_wavenumber(grid, axis, idx[axis]) * scale);
    }
    detail::fft_inverse(grid, out.values());
    return out;
}

VectorField gradient(const ComplexField& f) {
    const auto& grid = f.grid();
    ComplexField fhat = f;
    detail::fft_forward(grid, fhat.values());
    const double scale = 1.0 / double(grid.total());
    std::vector<ComplexField> comps;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        ComplexField d = fhat;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const auto idx = grid.unflatten(j);
            d[j] *= cplx(0.0, odd_wavenumber(grid, axis, idx[axis]) * scale);
        }
        detail::fft_inverse(grid, d.values());
        comps.push_back(std::move(d));
    }
    return VectorField(std::move(comps));
}

ComplexField laplacian(const ComplexField& f) {
    const auto& grid = f.grid();
    ComplexField out = f;
    detail::fft_forward(grid, out.values());
    const double scale = 1.0 / double(grid.total());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto k = wavevector(grid, j);
        out[j] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * scale;
    }
    detail::fft_inverse(grid, out.values());
    return out;
}

ComplexField divergence(const VectorField& a) {
    ComplexField out(a.grid());
    for (int axis = 0; axis < a.dim(); ++axis) out += derivative(a[axis], axis);
    return out;
}

cplx inner_l2(const ComplexField& f, const ComplexField& g) {
    require_same_grid(f.grid(), g.grid(), "inner_l2");
    cplx s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += std::conj(f[j]) * g[j];
    return s * f.grid().cell_volume();
}

double inner_real(const ComplexField& f, const ComplexField& g) {
    require_same_grid(f.grid(), g.grid(), "inner_real");
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j)
        s += f[j].real() * g[j].real() + f[j].imag() * g[j].imag();
    return s * f.grid().cell_volume();
}

double norm_l2(const ComplexField& f) {
    double s = 0.0;
    for (auto v : f.values()) s += std::norm(v);
    return std::sqrt(s * f.grid().cell_volume());
}

double norm_lp(const ComplexField& f, double p) {
    if (!(p >= 1.0)) throw PreconditionError("norm_lp: exponent must be >= 1");
    if (std::isinf(p)) return f.max_abs();
    if (p == 2.0) return norm_l2(f);
    double s = 0.0;
    for (auto v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

namespace {

double sobolev_norm(const ComplexField& f, int order) {
    const auto& grid = f.grid();
    ComplexField fhat = f;
    detail::fft_forward(grid, fhat.values());
    double s = 0.0;
    for (std::size_t j = 0; j < fhat.size(); ++j) {
        const auto k = wavevector(grid, j);
        const double w = 1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        s += (order == 1 ? w : w * w) * std::norm(fhat[j]);
    }
    // Unnormalized FFT: sum |F|^2 = N sum |f|^2.
    return std::sqrt(s * grid.cell_volume() / double(grid.total()));
}

}  // namespace

double norm_h1(const ComplexField& f) { return sobolev_norm(f, 1); }
double norm_h2(const ComplexField& f) { return sobolev_norm(f, 2); }

ComplexField radius_field(const GridSpec& grid) {
    return ComplexField::sample(grid, [](const Point& x) {
        return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    });
}

ComplexField japanese_weight(const GridSpec& grid, double s) {
    return ComplexField::sample(grid, [s](const Point& x) {
        return std::pow(1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2], 0.5 * s);
    });
}

double tail_mass_fraction(const ComplexField& f) {
    const auto& grid = f.grid();
    double total = 0.0, tail = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const auto idx = grid.unflatten(j);
        bool outer = false;
        for (int i = 0; i < grid.dim(); ++i) {
            const double c = double(idx[i]) * grid.spacing(i) - 0.5 * grid.length(i);
            if (std::abs(c) > 0.4 * grid.length(i)) outer = true;
        }
        const double m = std::norm(f[j]);
        total += m;
        if (outer) tail += m;
    }
    return total > 0.0 ? tail / total : 0.0;
}

// Snapshots -------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'N', 'L', 'S', 'F', 'L', 'D', '1'};

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <class T>
T get_le(std::span<const unsigned char> in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw StructuralError("snapshot truncated");
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

std::vector<unsigned char> encode_snapshot(const ComplexField& f) {
    const auto& grid = f.grid();
    std::vector<unsigned char> out(kMagic, kMagic + 8);
    out.reserve(8 + 4 + 16 * std::size_t(grid.dim()) + 16 * f.size());
    put_le<std::uint32_t>(out, std::uint32_t(grid.dim()));
    for (int i = 0; i < grid.dim(); ++i) put_le<std::uint64_t>(out, grid.size(i));
    for (int i = 0; i < grid.dim(); ++i) put_le<double>(out, grid.length(i));
    for (auto v : f.values()) {
        put_le<double>(out, v.real());
        put_le<double>(out, v.imag());
    }
    return out;
}

ComplexField decode_snapshot(std::span<const unsigned char> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw StructuralError("snapshot: bad magic");
    std::size_t pos = 8;
    const auto rank = get_le<std::uint32_t>(bytes, pos);
    if (rank < 1 || rank > 3) throw StructuralError("snapshot: rank must be 1, 2 or 3");
    std::vector<std::size_t> sizes(rank);
    std::vector<double> lengths(rank);
    for (auto& n : sizes) n = std::size_t(get_le<std::uint64_t>(bytes, pos));
    for (auto& l : lengths) l = get_le<double>(bytes, pos);
    GridSpec grid(sizes, lengths);
    if (bytes.size() - pos != 16 * grid.total())
        throw StructuralError("snapshot: payload size does not match header");
    std::vector<cplx> values(grid.total());
    for (auto& v : values) {
        const double re = get_le<double>(bytes, pos);
        const double im = get_le<double>(bytes, pos);
        v = {re, im};
    }
    return ComplexField(grid, std::move(values));
}

void write_snapshot(const std::string& path, const ComplexField& f) {
    const auto bytes = encode_snapshot(f);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw StructuralError("cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!os) throw StructuralError("failed writing " + path);
}

ComplexField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StructuralError("cannot open snapshot " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return decode_snapshot(bytes);
}

}  // namespace magnls
