#pragma once

// Periodic-box discretization of R^d and complex fields living on it.
//
// Conventions used throughout the library:
//   * coordinates on axis i are x_j = -L_i/2 + j h_i (centered) or j h_i,
//     with h_i = L_i / n_i;
//   * storage is row-major with the last axis fastest;
//   * discrete integrals carry the cell volume prod h_i, so norms and inner
//     products approximate their continuum counterparts;
//   * the transform is f^(k) = prod h_i * sum_j f_j exp(-i k.x_j), stored in
//     FFT order (bin m on axis i has k = 2 pi m / L_i for m < n_i/2 and
//     2 pi (m - n_i) / L_i otherwise).

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace magnls {

using cplx = std::complex<double>;
using Point = std::array<double, 3>;

class GridSpec {
public:
    GridSpec() = default;

    /// Throws StructuralError unless 1 <= dim <= 3, every size is a power of
    /// two >= 8 and every length is positive.
    GridSpec(std::vector<std::size_t> sizes, std::vector<double> lengths, bool centered = true);

    static GridSpec cube(int dim, std::size_t n, double length);

    int dim() const noexcept { return dim_; }
    std::size_t size(int axis) const noexcept { return sizes_[axis]; }
    double length(int axis) const noexcept { return lengths_[axis]; }
    bool centered() const noexcept { return centered_; }

    std::size_t total() const noexcept;
    double spacing(int axis) const noexcept { return lengths_[axis] / double(sizes_[axis]); }
    double min_spacing() const noexcept;
    double cell_volume() const noexcept;
    double volume() const noexcept;
    double min_length() const noexcept;

    double coordinate(int axis, std::size_t j) const noexcept;
    /// Signed wavenumber of FFT bin m on the given axis.
    double wavenumber(int axis, std::size_t m) const noexcept;
    /// Largest |k| component over all axes (the Nyquist wavenumber).
    double max_wavenumber() const noexcept;

    /// Multi-index of a flat index; unused axes are zero.
    std::array<std::size_t, 3> unflatten(std::size_t flat) const noexcept;
    Point point(std::size_t flat) const noexcept;

    std::vector<std::size_t> sizes() const { return {sizes_.begin(), sizes_.begin() + dim_}; }
    std::vector<double> lengths() const { return {lengths_.begin(), lengths_.begin() + dim_}; }

    std::string describe() const;

    friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept;

private:
    int dim_ = 0;
    std::array<std::size_t, 3> sizes_{1, 1, 1};
    std::array<double, 3> lengths_{1.0, 1.0, 1.0};
    bool centered_ = true;
};

class ComplexField {
public:
    ComplexField() = default;
    explicit ComplexField(const GridSpec& grid, cplx fill = {});
    /// Throws StructuralError if values.size() != grid.total().
    ComplexField(const GridSpec& grid, std::vector<cplx> values);

    template <class Fn>
    static ComplexField sample(const GridSpec& grid, Fn&& fn) {
        ComplexField out(grid);
        for (std::size_t j = 0; j < out.size(); ++j) out.values_[j] = cplx(fn(grid.point(j)));
        return out;
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const cplx> values() const noexcept { return values_; }
    std::span<cplx> values() noexcept { return values_; }
    cplx operator[](std::size_t j) const noexcept { return values_[j]; }
    cplx& operator[](std::size_t j) noexcept { return values_[j]; }

    bool all_finite() const noexcept;
    double max_abs() const noexcept;
    double max_imag() const noexcept;
    ComplexField conj() const;
    ComplexField real_part() const;
    ComplexField abs() const;

    ComplexField& operator+=(const ComplexField& other);
    ComplexField& operator-=(const ComplexField& other);
    ComplexField& operator*=(cplx s) noexcept;
    /// Pointwise product.
    ComplexField& operator*=(const ComplexField& other);

    /// y += a x without temporaries.
    ComplexField& axpy(cplx a, const ComplexField& x);

private:
    GridSpec grid_;
    std::vector<cplx> values_;
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator-(ComplexField a, const ComplexField& b);
ComplexField operator*(cplx s, ComplexField a);
ComplexField operator*(ComplexField a, cplx s);
ComplexField pointwise(ComplexField a, const ComplexField& b);

struct VectorField {
    std::vector<ComplexField> components;

    VectorField() = default;
    explicit VectorField(std::vector<ComplexField> comps);
    static VectorField zeros(const GridSpec& grid);

    const GridSpec& grid() const { return components.at(0).grid(); }
    int dim() const noexcept { return int(components.size()); }
    const ComplexField& operator[](int axis) const { return components[axis]; }
    ComplexField& operator[](int axis) { return components[axis]; }
    /// Pointwise Euclidean magnitude, real valued.
    ComplexField magnitude() const;
    double max_abs() const;
    double max_imag() const;
};

VectorField operator+(const VectorField& a, const VectorField& b);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

// Transforms ----------------------------------------------------------------

ComplexField dft(const ComplexField& f);
ComplexField idft(const ComplexField& fhat);
/// (sum_k |f^(k)|^2 / volume)^(1/2); equals norm_l2(f) by Parseval.
double norm_l2_frequency(const ComplexField& fhat);

namespace detail {
/// Unnormalized in-place FFTs on a field's storage (FFT order, no phase).
void fft_forward(const GridSpec& grid, std::span<cplx> data);
void fft_inverse(const GridSpec& grid, std::span<cplx> data);
}  // namespace detail

/// Applies a Fourier multiplier m(k) to f, i.e. idft(m * dft(f)). The
/// callable receives the wavevector of each bin.
ComplexField apply_multiplier(const ComplexField& f, const std::function<cplx(const Point&)>& m);

// Spectral calculus ---------------------------------------------------------
//
// First derivatives use the wavenumber with the Nyquist bin zeroed, so they
// map real fields to real fields and are exactly skew-adjoint. The Laplacian
// keeps the Nyquist bin.

ComplexField derivative(const ComplexField& f, int axis);
VectorField gradient(const ComplexField& f);
ComplexField laplacian(const ComplexField& f);
ComplexField divergence(const VectorField& a);

// Pairings and norms ---------------------------------------------------------

/// Complex L2 pairing (f, g) = sum conj(f) g dV.
cplx inner_l2(const ComplexField& f, const ComplexField& g);
/// Real pairing <f, g> = Re (f, g).
double inner_real(const ComplexField& f, const ComplexField& g);
double norm_l2(const ComplexField& f);
/// (sum |f|^p dV)^(1/p); p = infinity gives the sup norm.
double norm_lp(const ComplexField& f, double p);
/// H1 norm (||f||^2 + ||grad f||^2)^(1/2), computed on the frequency side.
double norm_h1(const ComplexField& f);
/// H2 norm ||(1 + |k|^2) f^||, computed on the frequency side.
double norm_h2(const ComplexField& f);

/// |x| with centered torus coordinates.
ComplexField radius_field(const GridSpec& grid);
/// (1 + |x|^2)^(s/2).
ComplexField japanese_weight(const GridSpec& grid, double s);

/// Fraction of ||f||^2 carried by the outer shell where some |x_i| exceeds
/// 0.4 L_i (the outer 10% on each side).
double tail_mass_fraction(const ComplexField& f);

// Snapshot I/O ----------------------------------------------------------------
//
// Layout (little endian): "MNLSFLD1", u32 rank d, d x u64 sizes, d x f64 box
// lengths, then prod n_i samples as (f64 re, f64 im), row-major.

void write_snapshot(const std::string& path, const ComplexField& f);
ComplexField read_snapshot(const std::string& path);
std::vector<unsigned char> encode_snapshot(const ComplexField& f);
ComplexField decode_snapshot(std::span<const unsigned char> bytes);

}  // namespace magnls
