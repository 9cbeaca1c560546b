#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <random>

#include "fsav/grid.hpp"
#include "fsav/spectral.hpp"

namespace fsav::test {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Grid2D periodic_grid(int n) { return Grid2D(n, n, kTwoPi, kTwoPi); }
inline Grid2D unit_grid(int n) { return Grid2D(n, n, 1.0, 1.0); }

template <class F>
SpectralField2D spectral(const Grid2D& g, F&& f) {
  return forward(RealField2D::sample(g, f));
}

/// max |a - b| over the collocation points.
inline double max_diff(const RealField2D& a, const RealField2D& b) {
  double m = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

inline double max_diff(const SpectralField2D& a, const SpectralField2D& b) {
  return max_diff(inverse(a), inverse(b));
}

template <class F>
  requires std::invocable<F&, double, double>
double max_diff(const SpectralField2D& a, F&& exact) {
  return max_diff(inverse(a), RealField2D::sample(a.grid(), exact));
}

/// Random mean-zero field whose modes satisfy |s(jx)|, |s(jy)| <= band.
inline SpectralField2D random_band(const Grid2D& g, int band, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  RealField2D f(g);
  for (double& v : f.values()) v = d(rng);
  SpectralField2D c = forward(f);
  for (int m = 0; m < c.rows(); ++m)
    for (int j = 0; j < c.cols(); ++j) {
      const int sx = Grid2D::signed_index(j, g.nx);
      const int sy = Grid2D::signed_index(m, g.ny);
      if (std::abs(sx) > band || std::abs(sy) > band || j == g.nx / 2 || m == g.ny / 2)
        c.at(j, m) = 0.0;
    }
  c.at(0, 0) = 0.0;
  return c;
}

}  // namespace fsav::test
