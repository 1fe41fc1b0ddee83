#pragma once

#include <cstddef>
#include <functional>

namespace rfgap {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Work items must
// write to disjoint outputs; callers assemble results by index so the outcome
// does not depend on scheduling. The first exception thrown is rethrown after
// all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace rfgap
