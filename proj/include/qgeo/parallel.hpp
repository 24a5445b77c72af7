#pragma once

#include <cstddef>
#include <functional>

namespace qgeo {

// Runs body(i) for i in [0, n) on at most `threads` workers. Results must be written
// to per-index slots so that output does not depend on scheduling. The first exception
// thrown by any worker is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

// QGEO_THREADS if set and positive, otherwise `requested` (at least 1).
std::size_t resolve_threads(std::size_t requested);

} // namespace qgeo
