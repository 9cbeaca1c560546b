#include "fsav/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>

#include "planner_lock.hpp"

namespace fsav {

namespace detail {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

using detail::planner_mutex;

struct FourierTransform::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

FourierTransform::FourierTransform(const Grid2D& grid)
    : grid_(grid), plans_(std::make_unique<Plans>()), scratch_(grid) {
  RealField2D probe(grid);
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* cbuf = reinterpret_cast<fftw_complex*>(scratch_.data().data());
  // FFTW's row-major n0 x n1 layout with n0 = ny, n1 = nx matches values[j*nx + i].
  plans_->r2c = fftw_plan_dft_r2c_2d(grid.ny, grid.nx, probe.values().data(), cbuf, FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_2d(grid.ny, grid.nx, cbuf, probe.values().data(),
                                     FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

FourierTransform::~FourierTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

void FourierTransform::forward(const RealField2D& in, SpectralField2D& out) {
  require_same_grid(grid_, in.grid(), "forward");
  if (!(out.grid() == grid_)) out = SpectralField2D(grid_);
  // r2c does not modify its input, but the FFTW signature is non-const.
  auto* src = const_cast<double*>(in.values().data());
  auto* dst = reinterpret_cast<fftw_complex*>(out.data().data());
  fftw_execute_dft_r2c(plans_->r2c, src, dst);
  out *= 1.0 / static_cast<double>(grid_.size());
}

void FourierTransform::inverse(const SpectralField2D& in, RealField2D& out) {
  require_same_grid(grid_, in.grid(), "inverse");
  if (!(out.grid() == grid_)) out = RealField2D(grid_);
  std::copy(in.data().begin(), in.data().end(), scratch_.data().begin());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch_.data().data()),
                       out.values().data());
}

SpectralField2D FourierTransform::forward(const RealField2D& in) {
  SpectralField2D out(grid_);
  forward(in, out);
  return out;
}

RealField2D FourierTransform::inverse(const SpectralField2D& in) {
  RealField2D out(grid_);
  inverse(in, out);
  return out;
}

FourierTransform& FourierTransform::cached(const Grid2D& grid) {
  thread_local std::map<std::tuple<int, int, double, double>, std::unique_ptr<FourierTransform>>
      cache;
  auto& slot = cache[{grid.nx, grid.ny, grid.lx, grid.ly}];
  if (!slot) slot = std::make_unique<FourierTransform>(grid);
  return *slot;
}

}  // namespace fsav
