#pragma once

#include <cstddef>
#include <vector>

namespace hyfluid {

// Thread count comes from HYFLUID_THREADS (falling back to OpenMP's default).
// Deterministic mode (HYFLUID_DETERMINISTIC=1, the default) switches gradient
// accumulation from atomic adds to per-worker buffers reduced in thread order,
// and makes all dot-product reductions use a fixed order.
int num_threads();
bool deterministic_mode();
void set_num_threads(int n);
void set_deterministic(bool on);

// Dot product with a fixed reduction order (per-thread partials summed in
// thread index order).
double det_dot(const double* a, const double* b, std::size_t n);
double det_sum(const double* a, std::size_t n);

}  // namespace hyfluid
