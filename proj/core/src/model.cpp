#include "fsav/model.hpp"

#include <cmath>
#include <numbers>

#include "fsav/errors.hpp"
#include "fsav/spectral.hpp"

namespace fsav {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// First derivative into a preallocated buffer; Nyquist zeroed.
void d1(const SpectralField2D& in, Axis axis, SpectralField2D& out) {
  const Grid2D& g = in.grid();
  const int nc = in.cols();
  for (int m = 0; m < in.rows(); ++m) {
    const double ky = (m == g.ny / 2) ? 0.0 : g.wavenumber_y(m);
    for (int j = 0; j < nc; ++j) {
      const double xi = axis == Axis::x ? ((j == g.nx / 2) ? 0.0 : g.wavenumber_x(j)) : ky;
      const complex_t c = in.at(j, m);
      out.at(j, m) = complex_t(-xi * c.imag(), xi * c.real());
    }
  }
}

bool is_two_pi(double l) { return std::abs(l - kTwoPi) <= 1e-12 * kTwoPi; }

}  // namespace

double inner(const VelocityField& a, const VelocityField& b) {
  return inner(a.u1, b.u1) + inner(a.u2, b.u2);
}

NonlinearWorkspace::NonlinearWorkspace(const Grid2D& grid)
    : grid_(grid),
      fft_(grid),
      s1_(grid), s2_(grid), s3_(grid), s4_(grid),
      r1_(grid), r2_(grid), r3_(grid), r4_(grid) {}

void NonlinearWorkspace::product_sum(const SpectralField2D& a1, const SpectralField2D& b1,
                                     const SpectralField2D& a2, const SpectralField2D& b2,
                                     SpectralField2D& out) {
  fft_.inverse(a1, r1_);
  fft_.inverse(b1, r2_);
  fft_.inverse(a2, r3_);
  fft_.inverse(b2, r4_);
  auto p1 = r1_.values();
  const auto q1 = r2_.values();
  const auto p2 = r3_.values();
  const auto q2 = r4_.values();
  for (std::size_t i = 0; i < p1.size(); ++i) p1[i] = p1[i] * q1[i] + p2[i] * q2[i];
  fft_.forward(r1_, out);
}

void NonlinearWorkspace::jacobian(const SpectralField2D& psi, const SpectralField2D& omega,
                                  bool dealias, SpectralField2D& out) {
  require_same_grid(grid_, psi.grid(), "jacobian");
  require_same_grid(grid_, omega.grid(), "jacobian");
  d1(psi, Axis::y, s1_);
  s1_ *= -1.0;
  d1(omega, Axis::x, s2_);
  d1(psi, Axis::x, s3_);
  d1(omega, Axis::y, s4_);
  if (dealias) {
    dealias_23_inplace(s1_);
    dealias_23_inplace(s2_);
    dealias_23_inplace(s3_);
    dealias_23_inplace(s4_);
  }
  if (!(out.grid() == grid_)) out = SpectralField2D(grid_);
  product_sum(s1_, s2_, s3_, s4_, out);
  if (dealias) dealias_23_inplace(out);
}

void NonlinearWorkspace::advection(const VelocityField& u, const VelocityField& v, bool dealias,
                                   VelocityField& out) {
  require_same_grid(grid_, u.grid(), "advection_primitive");
  require_same_grid(grid_, v.grid(), "advection_primitive");
  if (!(out.grid() == grid_)) out = VelocityField(grid_);
  SpectralField2D a1 = u.u1;
  SpectralField2D a2 = u.u2;
  if (dealias) {
    dealias_23_inplace(a1);
    dealias_23_inplace(a2);
  }
  const SpectralField2D* comps[2] = {&v.u1, &v.u2};
  SpectralField2D* dst[2] = {&out.u1, &out.u2};
  for (int c = 0; c < 2; ++c) {
    d1(*comps[c], Axis::x, s2_);
    d1(*comps[c], Axis::y, s4_);
    if (dealias) {
      dealias_23_inplace(s2_);
      dealias_23_inplace(s4_);
    }
    product_sum(a1, s2_, a2, s4_, *dst[c]);
    if (dealias) dealias_23_inplace(*dst[c]);
  }
}

SpectralField2D jacobian(const SpectralField2D& psi, const SpectralField2D& omega, bool dealias) {
  require_same_grid(psi.grid(), omega.grid(), "jacobian");
  NonlinearWorkspace ws(psi.grid());
  SpectralField2D out(psi.grid());
  ws.jacobian(psi, omega, dealias, out);
  return out;
}

SpectralField2D kolmogorov_vorticity_forcing(const Grid2D& grid, int m, double re) {
  if (m < 1) throw Error("kolmogorov forcing: m must be >= 1");
  if (!(re > 0.0)) throw Error("kolmogorov forcing: Re must be positive");
  if (!is_two_pi(grid.lx) || !is_two_pi(grid.ly))
    throw DomainMismatch("kolmogorov forcing requires the (0, 2pi)^2 domain");
  const double amp = std::pow(static_cast<double>(m), 4) / re;
  return forward(RealField2D::sample(grid, [&](double, double y) { return amp * std::sin(m * y); }));
}

VelocityField kolmogorov_velocity_forcing(const Grid2D& grid, int m, double re) {
  if (m < 1) throw Error("kolmogorov forcing: m must be >= 1");
  if (!is_two_pi(grid.lx) || !is_two_pi(grid.ly))
    throw DomainMismatch("kolmogorov forcing requires the (0, 2pi)^2 domain");
  const double amp = std::pow(static_cast<double>(m), 3) / re;
  VelocityField f(grid);
  f.u1 = forward(RealField2D::sample(grid, [&](double, double y) { return -amp * std::cos(m * y); }));
  return f;
}

ManufacturedCase manufactured_case_table3(double re) {
  ManufacturedCase c;
  c.id = "table3";
  c.lx = 1.0;
  c.ly = 1.0;
  c.re = re;
  constexpr double p = kTwoPi;
  c.omega = [](double t, double x, double y) {
    return std::sin(t) * std::sin(p * x) * std::sin(p * y);
  };
  c.psi = [](double t, double x, double y) {
    return std::cos(t) * std::cos(p * x) * std::cos(p * y);
  };
  c.source_omega = [re](double t, double x, double y) {
    const double sx = std::sin(p * x), cx = std::cos(p * x);
    const double sy = std::sin(p * y), cy = std::cos(p * y);
    const double st = std::sin(t), ct = std::cos(t);
    const double dt_omega = ct * sx * sy;
    const double diffusion = 2.0 * p * p / re * st * sx * sy;
    // (-psi_y) omega_x + psi_x omega_y for the exact pair
    const double advection = p * p * st * ct * (cx * cx * sy * sy - sx * sx * cy * cy);
    return dt_omega + diffusion + advection;
  };
  c.source_p = [](double t, double x, double y) {
    return std::sin(t) * std::sin(p * x) * std::sin(p * y) -
           2.0 * p * p * std::cos(t) * std::cos(p * x) * std::cos(p * y);
  };
  return c;
}

SpectralField2D sample_spectral(const Grid2D& grid, const ManufacturedCase::Evaluator& f, double t) {
  return forward(RealField2D::sample(grid, [&](double x, double y) { return f(t, x, y); }));
}

VelocityField velocity_from_streamfunction(const SpectralField2D& psi) {
  VelocityField u(psi.grid());
  d1(psi, Axis::y, u.u1);
  u.u1 *= -1.0;
  d1(psi, Axis::x, u.u2);
  return u;
}

SpectralField2D vorticity(const VelocityField& u) {
  require_same_grid(u.u1.grid(), u.u2.grid(), "vorticity");
  SpectralField2D a(u.grid());
  SpectralField2D b(u.grid());
  d1(u.u1, Axis::y, a);
  d1(u.u2, Axis::x, b);
  return a -= b;
}

SpectralField2D divergence(const VelocityField& u) {
  require_same_grid(u.u1.grid(), u.u2.grid(), "divergence");
  SpectralField2D a(u.grid());
  SpectralField2D b(u.grid());
  d1(u.u1, Axis::x, a);
  d1(u.u2, Axis::y, b);
  return a += b;
}

VelocityField velocity_from_vorticity(const SpectralField2D& omega) {
  return velocity_from_streamfunction(inv_neg_laplacian(omega));
}

VelocityField advection_primitive(const VelocityField& u, const VelocityField& v, bool dealias) {
  NonlinearWorkspace ws(u.grid());
  VelocityField out(u.grid());
  ws.advection(u, v, dealias, out);
  return out;
}

void leray_project_inplace(VelocityField& f) {
  require_same_grid(f.u1.grid(), f.u2.grid(), "leray_project");
  const Grid2D& g = f.grid();
  for (int m = 0; m < f.u1.rows(); ++m) {
    const double ky = (m == g.ny / 2) ? 0.0 : g.wavenumber_y(m);
    for (int j = 0; j < f.u1.cols(); ++j) {
      const double kx = (j == g.nx / 2) ? 0.0 : g.wavenumber_x(j);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      complex_t& a = f.u1.at(j, m);
      complex_t& b = f.u2.at(j, m);
      const complex_t dot = (kx * a + ky * b) / k2;
      a -= kx * dot;
      b -= ky * dot;
    }
  }
}

VelocityField leray_project(const VelocityField& f) {
  VelocityField out = f;
  leray_project_inplace(out);
  return out;
}

double trilinear(const SpectralField2D& nl, const SpectralField2D& v) { return inner(nl, v); }

}  // namespace fsav
