#pragma once

#include <functional>
#include <string>

#include "fsav/fourier.hpp"
#include "fsav/grid.hpp"

namespace fsav {

/// Orientation used throughout the library:
///   u = grad_perp psi = (-d_y psi, d_x psi),   omega = -Lap psi = d_y u1 - d_x u2,
///   jacobian(psi, omega) = u . grad omega.
/// The vorticity sign is the clockwise-positive one forced by omega = -Lap psi.

/// Velocity pair held as spectral components.
struct VelocityField {
  SpectralField2D u1;
  SpectralField2D u2;

  VelocityField() = default;
  explicit VelocityField(const Grid2D& g) : u1(g), u2(g) {}
  VelocityField(SpectralField2D a, SpectralField2D b) : u1(std::move(a)), u2(std::move(b)) {}

  const Grid2D& grid() const noexcept { return u1.grid(); }

  VelocityField& operator+=(const VelocityField& o) { u1 += o.u1; u2 += o.u2; return *this; }
  VelocityField& operator-=(const VelocityField& o) { u1 -= o.u1; u2 -= o.u2; return *this; }
  VelocityField& operator*=(double s) { u1 *= s; u2 *= s; return *this; }
  VelocityField& axpy(double s, const VelocityField& o) { u1.axpy(s, o.u1); u2.axpy(s, o.u2); return *this; }
  friend VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
  friend VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
  friend VelocityField operator*(double s, VelocityField a) { return a *= s; }
};

double inner(const VelocityField& a, const VelocityField& b);

/// Reusable buffers for the pseudo-spectral products. Not thread-safe; give
/// each stepper its own.
class NonlinearWorkspace {
 public:
  explicit NonlinearWorkspace(const Grid2D& grid);

  const Grid2D& grid() const noexcept { return grid_; }

  /// out = (-d_y psi)(d_x omega) + (d_x psi)(d_y omega), products formed at
  /// the collocation points. With `dealias`, inputs and output are 2/3-truncated.
  void jacobian(const SpectralField2D& psi, const SpectralField2D& omega, bool dealias,
                SpectralField2D& out);

  /// out = (u . grad) v componentwise.
  void advection(const VelocityField& u, const VelocityField& v, bool dealias, VelocityField& out);

  FourierTransform& transform() noexcept { return fft_; }

 private:
  void product_sum(const SpectralField2D& a1, const SpectralField2D& b1, const SpectralField2D& a2,
                   const SpectralField2D& b2, SpectralField2D& out);

  Grid2D grid_;
  FourierTransform fft_;
  SpectralField2D s1_, s2_, s3_, s4_;
  RealField2D r1_, r2_, r3_, r4_;
};

SpectralField2D jacobian(const SpectralField2D& psi, const SpectralField2D& omega,
                         bool dealias = false);

enum class ForcingKind { none, kolmogorov, manufactured };

struct ForcingSpec {
  ForcingKind kind = ForcingKind::none;
  /// Kolmogorov wavenumber.
  int m = 1;
  /// Manufactured case identifier; only "table3" exists.
  std::string case_id = "table3";
};

/// Vorticity of the Kolmogorov forcing, (m^4/Re) sin(m y). Requires a 2 pi x 2 pi domain.
SpectralField2D kolmogorov_vorticity_forcing(const Grid2D& grid, int m, double re);
/// Velocity forcing whose vorticity is the above: [-(m^3/Re) cos(m y), 0].
VelocityField kolmogorov_velocity_forcing(const Grid2D& grid, int m, double re);

/// Closed-form exact solution with the sources that make it satisfy
///   d_t omega - Lap omega / Re + jacobian(psi, omega) = source_omega,
///   -Lap psi = omega - source_p.
struct ManufacturedCase {
  using Evaluator = std::function<double(double t, double x, double y)>;
  std::string id;
  double lx = 1.0;
  double ly = 1.0;
  double re = 10.0;
  Evaluator omega;
  Evaluator psi;
  Evaluator source_omega;
  Evaluator source_p;
};

/// omega = sin t sin 2 pi x sin 2 pi y, psi = cos t cos 2 pi x cos 2 pi y on (0,1)^2.
ManufacturedCase manufactured_case_table3(double re = 10.0);

/// Samples an evaluator at time t and transforms it.
SpectralField2D sample_spectral(const Grid2D& grid, const ManufacturedCase::Evaluator& f, double t);

VelocityField velocity_from_streamfunction(const SpectralField2D& psi);
/// omega = d_y u1 - d_x u2.
SpectralField2D vorticity(const VelocityField& u);
SpectralField2D divergence(const VelocityField& u);
/// Velocity of a mean-zero vorticity field: grad_perp of (-Lap)^{-1} omega.
VelocityField velocity_from_vorticity(const SpectralField2D& omega);

VelocityField advection_primitive(const VelocityField& u, const VelocityField& v,
                                  bool dealias = false);

/// Per mode xi != 0: f <- f - xi (xi . f) / |xi|^2, with the derivative
/// wavenumbers (Nyquist zeroed) so the result has exactly zero spectral divergence.
VelocityField leray_project(const VelocityField& f);
void leray_project_inplace(VelocityField& f);

/// <nl, v> with the same quadrature as inner(SpectralField2D, SpectralField2D).
double trilinear(const SpectralField2D& nl, const SpectralField2D& v);

}  // namespace fsav
