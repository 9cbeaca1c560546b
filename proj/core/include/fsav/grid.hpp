#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fsav {

using complex_t = std::complex<double>;

/// Allocator returning SIMD-aligned storage so transform plans can execute
/// directly on field buffers.
template <class T>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t n) noexcept;

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free_bytes(void* p) noexcept;

template <class T>
T* AlignedAllocator<T>::allocate(std::size_t n) {
  return static_cast<T*>(aligned_alloc_bytes(n * sizeof(T)));
}

template <class T>
void AlignedAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  aligned_free_bytes(p);
}

template <class T>
using aligned_vector = std::vector<T, AlignedAllocator<T>>;

enum class Axis { x, y };

/// Uniform collocation grid on the periodic rectangle [0, lx) x [0, ly).
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;

  Grid2D() = default;
  /// Throws InvalidGrid unless nx, ny are even and >= 8 and lx, ly are positive.
  Grid2D(int nx, int ny, double lx, double ly);

  std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * ny; }
  /// Columns of the half spectrum kept by the real-to-complex layout.
  int spectral_cols() const noexcept { return nx / 2 + 1; }
  std::size_t spectral_size() const noexcept {
    return static_cast<std::size_t>(spectral_cols()) * ny;
  }

  double dx() const noexcept { return lx / nx; }
  double dy() const noexcept { return ly / ny; }
  double x(int i) const noexcept { return i * dx(); }
  double y(int j) const noexcept { return j * dy(); }
  double area() const noexcept { return lx * ly; }

  /// Signed integer wavenumber s(j) of storage index j along an axis of n points.
  static int signed_index(int j, int n) noexcept { return j < n / 2 ? j : j - n; }

  /// Angular wavenumber 2*pi*s(j)/l. The Nyquist entry is kept here; odd-order
  /// derivative symbols zero it separately.
  double wavenumber_x(int j) const noexcept;
  double wavenumber_y(int j) const noexcept;

  /// Smallest nonzero eigenvalue of -Laplacian on mean-zero periodic fields.
  double poincare_constant() const noexcept;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Throws GridMismatch when the grids differ.
void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where);

/// Physical-space samples, row-major with x fastest: values[j*nx + i] = f(x_i, y_j).
class RealField2D {
 public:
  RealField2D() = default;
  explicit RealField2D(const Grid2D& grid);

  template <class F>
  static RealField2D sample(const Grid2D& grid, F&& f) {
    RealField2D out(grid);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) out(i, j) = f(grid.x(i), grid.y(j));
    return out;
  }

  const Grid2D& grid() const noexcept { return grid_; }
  double& operator()(int i, int j) noexcept { return values_[static_cast<std::size_t>(j) * grid_.nx + i]; }
  double operator()(int i, int j) const noexcept {
    return values_[static_cast<std::size_t>(j) * grid_.nx + i];
  }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;
  double max_abs() const noexcept;

 private:
  Grid2D grid_;
  aligned_vector<double> values_;
};

/// Fourier coefficients of a real periodic field, normalized so that
/// coeff(0,0) is the mean:
///   f(x,y) = sum_{jx,jy} c(jx,jy) exp(i(2 pi jx x/lx + 2 pi jy y/ly)).
///
/// Only the half spectrum jx = 0..nx/2 is stored (rows jy = 0..ny-1); the
/// other half follows from c(-jx,-jy) = conj(c(jx,jy)).
class SpectralField2D {
 public:
  SpectralField2D() = default;
  explicit SpectralField2D(const Grid2D& grid);

  const Grid2D& grid() const noexcept { return grid_; }
  int rows() const noexcept { return grid_.ny; }
  int cols() const noexcept { return grid_.spectral_cols(); }

  /// Stored coefficient at (column jx in [0, nx/2], row jy in [0, ny)).
  complex_t& at(int jx, int jy) noexcept { return c_[static_cast<std::size_t>(jy) * cols() + jx]; }
  const complex_t& at(int jx, int jy) const noexcept {
    return c_[static_cast<std::size_t>(jy) * cols() + jx];
  }

  /// Coefficient of any (signed or wrapped) mode, reconstructed by symmetry.
  complex_t coeff(int jx, int jy) const noexcept;

  std::span<complex_t> data() noexcept { return c_; }
  std::span<const complex_t> data() const noexcept { return c_; }

  /// Max |c(j,m) - conj(c(-j,-m))| over the self-conjugate columns, divided by max |c|.
  double hermitian_defect() const noexcept;
  bool all_finite() const noexcept;
  /// Sum of |c| over the full spectrum: an upper bound for max |f| in physical space.
  double abs_sum() const noexcept;

  void set_zero() noexcept;

  SpectralField2D& operator+=(const SpectralField2D& o);
  SpectralField2D& operator-=(const SpectralField2D& o);
  SpectralField2D& operator*=(double s) noexcept;
  /// this += s * o
  SpectralField2D& axpy(double s, const SpectralField2D& o);

  friend SpectralField2D operator+(SpectralField2D a, const SpectralField2D& b) { return a += b; }
  friend SpectralField2D operator-(SpectralField2D a, const SpectralField2D& b) { return a -= b; }
  friend SpectralField2D operator*(double s, SpectralField2D a) { return a *= s; }
  friend SpectralField2D operator*(SpectralField2D a, double s) { return a *= s; }
  friend SpectralField2D operator-(SpectralField2D a) { return a *= -1.0; }

 private:
  Grid2D grid_;
  aligned_vector<complex_t> c_;
};

}  // namespace fsav
