#pragma once

#include "fsav/fourier.hpp"
#include "fsav/grid.hpp"

namespace fsav {

/// Forward transform; throws InvalidField on non-finite input.
SpectralField2D forward(const RealField2D& field);
RealField2D inverse(const SpectralField2D& field);

/// Multiplies each coefficient by (i xi)^order along `axis`. For odd orders
/// the Nyquist row/column is zeroed so the result stays Hermitian.
SpectralField2D deriv(const SpectralField2D& field, Axis axis, int order = 1);

/// Symbol of -Laplacian at stored index (jx, jy): xi_x^2 + xi_y^2 (Nyquist kept).
inline double neg_laplacian_symbol(const Grid2D& g, int jx, int jy) noexcept {
  const double kx = g.wavenumber_x(jx);
  const double ky = g.wavenumber_y(jy);
  return kx * kx + ky * ky;
}

SpectralField2D laplacian(const SpectralField2D& field);

/// Solves -Lap psi = omega for the zero-mean psi. Throws MeanNotZero when the
/// mean of omega exceeds `mean_tol` relative to its largest coefficient.
SpectralField2D inv_neg_laplacian(const SpectralField2D& omega, double mean_tol = 1e-10);

/// Collocation quadrature (lx ly / (nx ny)) sum a*b.
double inner(const RealField2D& a, const RealField2D& b);
/// Same quadrature evaluated through discrete Parseval: lx ly sum Re(conj(a_k) b_k).
double inner(const SpectralField2D& a, const SpectralField2D& b);

struct FieldNorms {
  double l2 = 0.0;
  /// sqrt(<-Lap f, f>), i.e. ||grad f|| with the Laplacian's Nyquist convention.
  double h1_semi = 0.0;
  double linf = 0.0;
};

FieldNorms norms(const SpectralField2D& field);

/// Zeroes modes with |s(jx)| > nx/3 or |s(jy)| > ny/3.
SpectralField2D dealias_23(const SpectralField2D& field);
void dealias_23_inplace(SpectralField2D& field);

}  // namespace fsav
