#pragma once

#include <cstddef>
#include <functional>

namespace vtax {

// Caps worker threads used by parallel_for; 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs body(i) for i in [0, n). Work items must write only to their own
// slots; scheduling then cannot change results. The first exception thrown
// by any item is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vtax
