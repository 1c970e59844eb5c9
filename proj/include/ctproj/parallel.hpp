#pragma once

#include <functional>

namespace ctproj {

/// Worker count used by parallel_for. Defaults to 1; values < 1 are treated as 1.
void set_thread_count(int n) noexcept;
int thread_count() noexcept;

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs;
/// results never depend on the worker count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace ctproj
