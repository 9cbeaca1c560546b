#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <string>

#include "fsav/diagnostics.hpp"
#include "fsav/errors.hpp"
#include "fsav/grid.hpp"
#include "fsav/model.hpp"

namespace fsav {

/// du/dt + A u + N(u, u) = F with A symmetric positive and <N(u, u), u> = 0.
/// Vectors need +, -, scalar * and a default constructor; solve_shifted must
/// be exact.
template <class S>
concept DissipativeSystem = requires(const S& s, const typename S::vector_type& u, double x,
                                     std::mt19937_64& rng) {
  typename S::vector_type;
  { s.apply_A(u) } -> std::convertible_to<typename S::vector_type>;
  { s.apply_N(u, u) } -> std::convertible_to<typename S::vector_type>;
  { s.forcing(x) } -> std::convertible_to<typename S::vector_type>;
  { s.inner(u, u) } -> std::convertible_to<double>;
  /// (sigma I + A)^{-1} rhs
  { s.solve_shifted(x, u) } -> std::convertible_to<typename S::vector_type>;
  { s.random_vector(rng) } -> std::convertible_to<typename S::vector_type>;
  { u + u } -> std::convertible_to<typename S::vector_type>;
  { u - u } -> std::convertible_to<typename S::vector_type>;
  { x * u } -> std::convertible_to<typename S::vector_type>;
};

template <class V>
struct AbstractState {
  V u_n;
  V u_nm1;
  double q_n = 1.0;
  double q_nm1 = 1.0;
  double t = 0.0;
  std::uint64_t step = 0;
  /// 1 until the first-order starter has run.
  int levels = 1;
};

template <class V>
AbstractState<V> abstract_initial_state(V u0, double t0 = 0.0) {
  AbstractState<V> s;
  s.u_nm1 = u0;
  s.u_n = std::move(u0);
  s.t = t0;
  return s;
}

/// One FSAV step: the BDF1 starter when the state has one level, else BDF2.
/// Throws BlowUp on a non-finite result and DenominatorNonpositive if the
/// scalar update cannot be formed.
template <DissipativeSystem S>
StepReport abstract_step(AbstractState<typename S::vector_type>& s, const S& sys, double k,
                         double gamma) {
  using V = typename S::vector_type;
  if (!(k > 0.0) || !(gamma > 0.0)) throw Error("abstract_step: k and gamma must be positive");
  const bool bdf2 = s.levels > 1;
  const double t_new = s.t + k;
  const double sigma = bdf2 ? 1.5 / k : 1.0 / k;

  const V ubar = bdf2 ? V(2.0 * s.u_n - s.u_nm1) : s.u_n;
  const V nbar = sys.apply_N(ubar, ubar);
  const V f = sys.forcing(t_new);
  const V hist = bdf2 ? V((2.0 / k) * s.u_n - (0.5 / k) * s.u_nm1) : V((1.0 / k) * s.u_n);
  const V u1 = sys.solve_shifted(sigma, f + hist);
  const V u2 = sys.solve_shifted(sigma, -1.0 * nbar);

  StepReport rep;
  rep.trilinear_b1 = sys.inner(nbar, u1);
  rep.trilinear_b2 = sys.inner(nbar, u2);
  rep.q_denominator_bound = sigma + gamma;
  rep.q_denominator = rep.q_denominator_bound - rep.trilinear_b2;
  if (!(rep.q_denominator > 0.0))
    throw DenominatorNonpositive("abstract_step: scalar update denominator is not positive");
  const double qhist = bdf2 ? (4.0 * s.q_n - s.q_nm1) / (2.0 * k) : s.q_n / k;
  const double q = (gamma + qhist + rep.trilinear_b1) / rep.q_denominator;
  V u_new = u1 + q * u2;

  const double nn = sys.inner(u_new, u_new);
  if (!std::isfinite(nn) || !std::isfinite(q))
    throw BlowUp(t_new, s.step + 1, "abstract_step: non-finite state");

  FieldEnergyParts fp;
  fp.dissipation = k * sys.inner(sys.apply_A(u_new), u_new);
  fp.forcing_work = k * sys.inner(f, u_new);
  if (bdf2) {
    fp.g_new = 0.25 * sys.inner(s.u_n, s.u_n) - sys.inner(s.u_n, u_new) + 1.25 * nn;
    fp.g_old = 0.25 * sys.inner(s.u_nm1, s.u_nm1) - sys.inner(s.u_nm1, s.u_n) +
               1.25 * sys.inner(s.u_n, s.u_n);
    const V c = u_new - 2.0 * s.u_n + s.u_nm1;
    fp.curvature = 0.25 * sys.inner(c, c);
    rep.energy_identity_residual = bdf2_budget(fp, q, s.q_n, s.q_nm1, k, gamma).residual();
  } else {
    fp.g_new = 0.5 * nn;
    fp.g_old = 0.5 * sys.inner(s.u_n, s.u_n);
    const V d = u_new - s.u_n;
    fp.curvature = 0.5 * sys.inner(d, d);
    rep.energy_identity_residual = bdf1_budget(fp, q, s.q_n, k, gamma).residual();
  }
  rep.q_new = q;

  s.u_nm1 = std::move(s.u_n);
  s.u_n = std::move(u_new);
  s.q_nm1 = s.q_n;
  s.q_n = q;
  s.t = t_new;
  s.step += 1;
  s.levels = 2;
  return rep;
}

struct SystemReport {
  int trials = 0;
  /// max |<Au, v> - <u, Av>| / (|Au||v| + |u||Av|)
  double symmetry_violation = 0.0;
  /// min <Au, u> / <u, u> over the trials; must be positive.
  double min_rayleigh = 0.0;
  /// max |<N(u,u), u>| / (|N(u,u)| |u|)
  double neutrality_violation = 0.0;

  bool ok(double tol) const noexcept {
    return symmetry_violation <= tol && neutrality_violation <= tol && min_rayleigh > 0.0;
  }
};

/// Random-vector spot checks of the structural assumptions.
template <DissipativeSystem S>
SystemReport verify_system(const S& sys, int trials, std::uint64_t seed = 12345) {
  if (trials < 1) throw Error("verify_system: trials must be >= 1");
  std::mt19937_64 rng(seed);
  SystemReport r;
  r.trials = trials;
  r.min_rayleigh = INFINITY;
  auto norm = [&](const auto& v) { return std::sqrt(sys.inner(v, v)); };
  for (int i = 0; i < trials; ++i) {
    const auto u = sys.random_vector(rng);
    const auto v = sys.random_vector(rng);
    const auto au = sys.apply_A(u);
    const auto av = sys.apply_A(v);
    const double sden = norm(au) * norm(v) + norm(u) * norm(av);
    if (sden > 0.0)
      r.symmetry_violation = std::max(
          r.symmetry_violation, std::abs(sys.inner(au, v) - sys.inner(u, av)) / sden);
    const double uu = sys.inner(u, u);
    if (uu > 0.0) r.min_rayleigh = std::min(r.min_rayleigh, sys.inner(au, u) / uu);
    const auto n = sys.apply_N(u, u);
    const double nden = norm(n) * norm(u);
    if (nden > 0.0)
      r.neutrality_violation = std::max(r.neutrality_violation, std::abs(sys.inner(n, u)) / nden);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Concrete systems
// ---------------------------------------------------------------------------

struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  double& operator[](int i) noexcept { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const noexcept { return v[static_cast<std::size_t>(i)]; }
  double norm() const noexcept { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

  friend Vec3 operator+(Vec3 a, const Vec3& b) noexcept {
    for (int i = 0; i < 3; ++i) a[i] += b[i];
    return a;
  }
  friend Vec3 operator-(Vec3 a, const Vec3& b) noexcept {
    for (int i = 0; i < 3; ++i) a[i] -= b[i];
    return a;
  }
  friend Vec3 operator*(double s, Vec3 a) noexcept {
    for (int i = 0; i < 3; ++i) a[i] *= s;
    return a;
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// A = diag(nu), N(u, v) = (c1 u2 v3, c2 u3 v1, c3 u1 v2) with c1 + c2 + c3 = 0.
class ToyTriad {
 public:
  using vector_type = Vec3;

  /// Throws Error unless nu > 0 componentwise and |c1 + c2 + c3| <= 1e-14 max|c|.
  ToyTriad(Vec3 nu, Vec3 c, Vec3 f);

  Vec3 apply_A(const Vec3& u) const noexcept;
  Vec3 apply_N(const Vec3& u, const Vec3& v) const noexcept;
  Vec3 forcing(double) const noexcept { return f_; }
  double inner(const Vec3& a, const Vec3& b) const noexcept;
  Vec3 solve_shifted(double sigma, const Vec3& rhs) const noexcept;
  Vec3 random_vector(std::mt19937_64& rng) const;

 private:
  Vec3 nu_, c_, f_;
};

/// Streamfunction-vorticity NSE as an abstract system on mean-zero vorticity:
/// A = -Lap / Re, N(u, v) = jacobian((-Lap)^{-1} u, v), constant forcing.
class SpectralNseSystem {
 public:
  using vector_type = SpectralField2D;

  SpectralNseSystem(const Grid2D& grid, double re, SpectralField2D forcing, bool dealias = false);

  SpectralField2D apply_A(const SpectralField2D& u) const;
  SpectralField2D apply_N(const SpectralField2D& u, const SpectralField2D& v) const;
  SpectralField2D forcing(double) const { return f_; }
  double inner(const SpectralField2D& a, const SpectralField2D& b) const;
  SpectralField2D solve_shifted(double sigma, const SpectralField2D& rhs) const;
  /// Mean-zero field with random coefficients on the 2/3-resolved band.
  SpectralField2D random_vector(std::mt19937_64& rng) const;

 private:
  Grid2D grid_;
  double re_;
  SpectralField2D f_;
  bool dealias_;
};

static_assert(DissipativeSystem<ToyTriad>);
static_assert(DissipativeSystem<SpectralNseSystem>);

}  // namespace fsav
