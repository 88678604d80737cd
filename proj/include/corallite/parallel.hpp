#pragma once

#include <cstddef>
#include <functional>

namespace corallite {

/// Process-wide worker cap used by parallel_for (CLI `--threads`). 0 = hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n). Work items must write to disjoint outputs.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace corallite
