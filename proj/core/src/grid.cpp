#include "fsav/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <new>
#include <numbers>
#include <string>

#include "fsav/errors.hpp"

namespace fsav {

void* aligned_alloc_bytes(std::size_t bytes) {
  if (bytes == 0) bytes = 1;
  void* p = fftw_malloc(bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void aligned_free_bytes(void* p) noexcept { fftw_free(p); }

Grid2D::Grid2D(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
  if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
    throw InvalidGrid("grid sizes must be even and >= 8, got " + std::to_string(nx) + "x" +
                      std::to_string(ny));
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw InvalidGrid("domain lengths must be positive and finite");
}

double Grid2D::wavenumber_x(int j) const noexcept {
  return 2.0 * std::numbers::pi * signed_index(j, nx) / lx;
}

double Grid2D::wavenumber_y(int j) const noexcept {
  return 2.0 * std::numbers::pi * signed_index(j, ny) / ly;
}

double Grid2D::poincare_constant() const noexcept {
  const double kmin = 2.0 * std::numbers::pi / std::max(lx, ly);
  return kmin * kmin;
}

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* where) {
  if (!(a == b))
    throw GridMismatch(std::string(where) + ": grids differ (" + std::to_string(a.nx) + "x" +
                       std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" +
                       std::to_string(b.ny) + ")");
}

RealField2D::RealField2D(const Grid2D& grid) : grid_(grid), values_(grid.size(), 0.0) {}

bool RealField2D::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double RealField2D::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpectralField2D::SpectralField2D(const Grid2D& grid)
    : grid_(grid), c_(grid.spectral_size(), complex_t(0.0, 0.0)) {}

complex_t SpectralField2D::coeff(int jx, int jy) const noexcept {
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  jx = ((jx % nx) + nx) % nx;
  jy = ((jy % ny) + ny) % ny;
  if (jx <= nx / 2) return at(jx, jy);
  return std::conj(at(nx - jx, (ny - jy) % ny));
}

double SpectralField2D::hermitian_defect() const noexcept {
  double scale = 0.0;
  for (const auto& c : c_) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  const int ny = grid_.ny;
  for (int col : {0, grid_.nx / 2}) {
    for (int m = 0; m < ny; ++m) {
      const complex_t a = at(col, m);
      const complex_t b = at(col, (ny - m) % ny);
      worst = std::max(worst, std::abs(a - std::conj(b)));
    }
  }
  return worst / scale;
}

bool SpectralField2D::all_finite() const noexcept {
  return std::all_of(c_.begin(), c_.end(), [](const complex_t& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

double SpectralField2D::abs_sum() const noexcept {
  const int nc = cols();
  const int last = grid_.nx / 2;
  double s = 0.0;
  for (int m = 0; m < rows(); ++m)
    for (int j = 0; j < nc; ++j) s += (j == 0 || j == last ? 1.0 : 2.0) * std::abs(at(j, m));
  return s;
}

void SpectralField2D::set_zero() noexcept { std::fill(c_.begin(), c_.end(), complex_t(0.0, 0.0)); }

SpectralField2D& SpectralField2D::operator+=(const SpectralField2D& o) {
  require_same_grid(grid_, o.grid_, "SpectralField2D::operator+=");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField2D& SpectralField2D::operator-=(const SpectralField2D& o) {
  require_same_grid(grid_, o.grid_, "SpectralField2D::operator-=");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField2D& SpectralField2D::operator*=(double s) noexcept {
  for (auto& c : c_) c *= s;
  return *this;
}

SpectralField2D& SpectralField2D::axpy(double s, const SpectralField2D& o) {
  require_same_grid(grid_, o.grid_, "SpectralField2D::axpy");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  return *this;
}

}  // namespace fsav
