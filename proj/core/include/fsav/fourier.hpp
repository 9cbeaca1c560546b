#pragma once

#include <memory>

#include "fsav/grid.hpp"

namespace fsav {

/// Real-to-complex transform pair for one grid, backed by FFTW.
///
/// Plans are built with FFTW_ESTIMATE so that the chosen algorithm, and
/// hence the round-off pattern, is identical from run to run. Plan creation
/// is serialized internally; execution is reentrant, but a given instance owns
/// a scratch buffer and must not be shared between threads.
class FourierTransform {
 public:
  explicit FourierTransform(const Grid2D& grid);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;

  const Grid2D& grid() const noexcept { return grid_; }

  /// Mean-normalized forward transform (coeff(0,0) = mean).
  void forward(const RealField2D& in, SpectralField2D& out);
  void inverse(const SpectralField2D& in, RealField2D& out);

  SpectralField2D forward(const RealField2D& in);
  RealField2D inverse(const SpectralField2D& in);

  /// Per-thread cached instance for the given grid.
  static FourierTransform& cached(const Grid2D& grid);

 private:
  struct Plans;
  Grid2D grid_;
  std::unique_ptr<Plans> plans_;
  SpectralField2D scratch_;
};

}  // namespace fsav
