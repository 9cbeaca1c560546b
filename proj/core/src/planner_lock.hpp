#pragma once

#include <mutex>

namespace fsav::detail {

/// FFTW's planner is not thread-safe; every plan create/destroy holds this.
std::mutex& planner_mutex();

}  // namespace fsav::detail
