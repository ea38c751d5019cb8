#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>

namespace vtc {

enum class Execution { serial, parallel };

/// Sets the OpenMP worker count used by parallel kernels (n >= 1).
void set_threads(int n);
int max_threads();

/// Runs body(i) for i in [0, n). In parallel mode the iterations are spread
/// over OpenMP workers; if any iteration throws, the exception of the lowest
/// failing index is rethrown after the loop, so error reports do not depend
/// on the worker count.
template <class Body>
void parallel_for(std::size_t n, Execution ex, Body&& body) {
  if (ex == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::size_t error_index = n;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(vtc_parallel_for_error)
      {
        if (static_cast<std::size_t>(i) < error_index) {
          error_index = static_cast<std::size_t>(i);
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace vtc
