#pragma once

#include <cstddef>
#include <functional>

namespace softsensor {

// Process-wide worker count for forest training. 0 selects
// std::thread::hardware_concurrency().
void set_thread_count(std::size_t n);
std::size_t thread_count();

// Runs body(i) for i in [0, n). Work items must write to disjoint outputs;
// results never depend on which worker ran which item. The first exception
// thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace softsensor
