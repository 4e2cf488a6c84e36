#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

namespace obata {

enum class Execution { serial, parallel };

// Runs body(i) for i in [0, n). Results must be written to per-index slots so
// that the outcome is independent of scheduling. The first failing index (in
// index order, not completion order) is rethrown.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace obata
