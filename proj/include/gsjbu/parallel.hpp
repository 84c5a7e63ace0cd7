#pragma once

#include <functional>

namespace gsjbu {

// Process-wide worker count for row-parallel loops. 0 restores the hardware
// default. Results never depend on the count: rows write disjoint state and
// reductions merge in fixed row order.
void set_thread_count(int n);
int thread_count();

// Runs fn(row) for row in [0, rows). Rows are claimed dynamically; fn must
// only touch state owned by its row.
void parallel_for_rows(int rows, const std::function<void(int)>& fn);

} // namespace gsjbu
