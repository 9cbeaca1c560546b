#include "fsav/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "fsav/errors.hpp"

namespace fsav {

namespace {

// Derivative wavenumber for odd orders: Nyquist has no symmetric derivative.
double odd_wavenumber(const Grid2D& g, Axis axis, int j) {
  if (axis == Axis::x) return (j == g.nx / 2) ? 0.0 : g.wavenumber_x(j);
  return (j == g.ny / 2) ? 0.0 : g.wavenumber_y(j);
}

complex_t ipow(double xi, int order) {
  // (i xi)^order
  complex_t r(1.0, 0.0);
  const complex_t f(0.0, xi);
  for (int p = 0; p < order; ++p) r *= f;
  return r;
}

}  // namespace

SpectralField2D forward(const RealField2D& field) {
  if (!field.all_finite()) throw InvalidField("forward: non-finite sample");
  return FourierTransform::cached(field.grid()).forward(field);
}

RealField2D inverse(const SpectralField2D& field) {
  return FourierTransform::cached(field.grid()).inverse(field);
}

SpectralField2D deriv(const SpectralField2D& field, Axis axis, int order) {
  if (order < 1) throw Error("deriv: order must be positive");
  const Grid2D& g = field.grid();
  SpectralField2D out(g);
  const bool odd = (order % 2) == 1;
  for (int m = 0; m < field.rows(); ++m) {
    for (int j = 0; j < field.cols(); ++j) {
      const int idx = axis == Axis::x ? j : m;
      double xi = 0.0;
      if (odd)
        xi = odd_wavenumber(g, axis, idx);
      else
        xi = axis == Axis::x ? g.wavenumber_x(idx) : g.wavenumber_y(idx);
      out.at(j, m) = ipow(xi, order) * field.at(j, m);
    }
  }
  return out;
}

SpectralField2D laplacian(const SpectralField2D& field) {
  const Grid2D& g = field.grid();
  SpectralField2D out(g);
  for (int m = 0; m < field.rows(); ++m)
    for (int j = 0; j < field.cols(); ++j)
      out.at(j, m) = -neg_laplacian_symbol(g, j, m) * field.at(j, m);
  return out;
}

SpectralField2D inv_neg_laplacian(const SpectralField2D& omega, double mean_tol) {
  double scale = 0.0;
  for (const auto& c : omega.data()) scale = std::max(scale, std::abs(c));
  if (std::abs(omega.at(0, 0)) > mean_tol * scale)
    throw MeanNotZero("inv_neg_laplacian: input mean is not zero");
  const Grid2D& g = omega.grid();
  SpectralField2D psi(g);
  for (int m = 0; m < omega.rows(); ++m) {
    for (int j = 0; j < omega.cols(); ++j) {
      if (j == 0 && m == 0) continue;
      psi.at(j, m) = omega.at(j, m) / neg_laplacian_symbol(g, j, m);
    }
  }
  return psi;
}

double inner(const RealField2D& a, const RealField2D& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const Grid2D& g = a.grid();
  return s * g.area() / static_cast<double>(g.size());
}

double inner(const SpectralField2D& a, const SpectralField2D& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  const Grid2D& g = a.grid();
  const int nc = a.cols();
  const int last = g.nx / 2;
  double s = 0.0;
  for (int m = 0; m < a.rows(); ++m) {
    const complex_t* pa = &a.at(0, m);
    const complex_t* pb = &b.at(0, m);
    double row = 0.0;
    for (int j = 0; j < nc; ++j) {
      const double w = (j == 0 || j == last) ? 1.0 : 2.0;
      row += w * (pa[j].real() * pb[j].real() + pa[j].imag() * pb[j].imag());
    }
    s += row;
  }
  return s * g.area();
}

FieldNorms norms(const SpectralField2D& field) {
  const Grid2D& g = field.grid();
  const int nc = field.cols();
  const int last = g.nx / 2;
  double l2 = 0.0;
  double h1 = 0.0;
  for (int m = 0; m < field.rows(); ++m) {
    for (int j = 0; j < nc; ++j) {
      const double w = (j == 0 || j == last) ? 1.0 : 2.0;
      const double a2 = std::norm(field.at(j, m));
      l2 += w * a2;
      h1 += w * neg_laplacian_symbol(g, j, m) * a2;
    }
  }
  FieldNorms out;
  out.l2 = std::sqrt(l2 * g.area());
  out.h1_semi = std::sqrt(h1 * g.area());
  out.linf = inverse(field).max_abs();
  return out;
}

void dealias_23_inplace(SpectralField2D& field) {
  const Grid2D& g = field.grid();
  for (int m = 0; m < field.rows(); ++m) {
    const bool cut_y = 3 * std::abs(Grid2D::signed_index(m, g.ny)) > g.ny;
    for (int j = 0; j < field.cols(); ++j) {
      const bool cut_x = 3 * std::abs(Grid2D::signed_index(j, g.nx)) > g.nx;
      if (cut_x || cut_y) field.at(j, m) = complex_t(0.0, 0.0);
    }
  }
}

SpectralField2D dealias_23(const SpectralField2D& field) {
  SpectralField2D out = field;
  dealias_23_inplace(out);
  return out;
}

}  // namespace fsav
