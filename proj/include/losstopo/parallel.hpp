#pragma once

#include <cstddef>
#include <functional>

namespace losstopo {

// Worker count taken from LOSSSCAPE_THREADS (0 means sequential). Unset
// falls back to the hardware concurrency.
std::size_t thread_budget();

// Calls body(i) for i in [0, n). Each index is visited exactly once; the
// caller owns result slots per index so the outcome is independent of
// scheduling. Nested calls from a worker run sequentially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace losstopo
