#pragma once

#include <cstddef>
#include <functional>

namespace barrierkit {

/// Worker count: BARRIERKIT_THREADS when set (minimum 1), otherwise the
/// hardware concurrency.
std::size_t thread_budget();

/// Run fn(i) for i in [0, count), spread over the thread budget. Work items
/// must be independent; results keyed by index are deterministic regardless
/// of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace barrierkit
