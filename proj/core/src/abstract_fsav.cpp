#include "fsav/abstract_fsav.hpp"

#include <algorithm>

#include "fsav/spectral.hpp"

namespace fsav {

ToyTriad::ToyTriad(Vec3 nu, Vec3 c, Vec3 f) : nu_(nu), c_(c), f_(f) {
  for (int i = 0; i < 3; ++i)
    if (!(nu[i] > 0.0)) throw Error("ToyTriad: nu must be positive");
  const double cmax = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
  if (std::abs(c[0] + c[1] + c[2]) > 1e-14 * cmax)
    throw Error("ToyTriad: coupling coefficients must sum to zero");
}

Vec3 ToyTriad::apply_A(const Vec3& u) const noexcept {
  Vec3 r;
  for (int i = 0; i < 3; ++i) r[i] = nu_[i] * u[i];
  return r;
}

Vec3 ToyTriad::apply_N(const Vec3& u, const Vec3& v) const noexcept {
  Vec3 r;
  r[0] = c_[0] * u[1] * v[2];
  r[1] = c_[1] * u[2] * v[0];
  r[2] = c_[2] * u[0] * v[1];
  return r;
}

double ToyTriad::inner(const Vec3& a, const Vec3& b) const noexcept {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 ToyTriad::solve_shifted(double sigma, const Vec3& rhs) const noexcept {
  Vec3 r;
  for (int i = 0; i < 3; ++i) r[i] = rhs[i] / (sigma + nu_[i]);
  return r;
}

Vec3 ToyTriad::random_vector(std::mt19937_64& rng) const {
  std::normal_distribution<double> d;
  Vec3 r;
  for (int i = 0; i < 3; ++i) r[i] = d(rng);
  return r;
}

SpectralNseSystem::SpectralNseSystem(const Grid2D& grid, double re, SpectralField2D forcing,
                                     bool dealias)
    : grid_(grid), re_(re), f_(std::move(forcing)), dealias_(dealias) {
  if (!(re > 0.0)) throw Error("SpectralNseSystem: Re must be positive");
  require_same_grid(grid_, f_.grid(), "SpectralNseSystem");
}

SpectralField2D SpectralNseSystem::apply_A(const SpectralField2D& u) const {
  SpectralField2D r = laplacian(u);
  r *= -1.0 / re_;
  return r;
}

SpectralField2D SpectralNseSystem::apply_N(const SpectralField2D& u,
                                           const SpectralField2D& v) const {
  SpectralField2D psi = u;
  psi.at(0, 0) = 0.0;
  return jacobian(inv_neg_laplacian(psi), v, dealias_);
}

double SpectralNseSystem::inner(const SpectralField2D& a, const SpectralField2D& b) const {
  return fsav::inner(a, b);
}

SpectralField2D SpectralNseSystem::solve_shifted(double sigma, const SpectralField2D& rhs) const {
  SpectralField2D r(grid_);
  for (int m = 0; m < rhs.rows(); ++m)
    for (int j = 0; j < rhs.cols(); ++j)
      r.at(j, m) = rhs.at(j, m) / (sigma + neg_laplacian_symbol(grid_, j, m) / re_);
  return r;
}

SpectralField2D SpectralNseSystem::random_vector(std::mt19937_64& rng) const {
  std::normal_distribution<double> d;
  RealField2D phys(grid_);
  for (double& x : phys.values()) x = d(rng);
  SpectralField2D r = forward(phys);
  dealias_23_inplace(r);
  r.at(0, 0) = 0.0;
  return r;
}

}  // namespace fsav
