#pragma once

// Helpers shared by the flow and map orbit searches: real coordinates of
// real states, the real Jacobian of a tangent map and a small thread pool.

#include <atomic>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "spintrace/classical.hpp"

namespace spintrace::detail {

/// (Re u_i, Im u_i) of a real state in its own charts.
RVector to_real(const ClassicalState& s);

ClassicalState from_real(const RVector& x, const std::vector<Chart>& charts);

double unit_distance(const ClassicalState& a, const ClassicalState& b);

/// Jacobian of the real end coordinates (read in `end_charts`) with respect
/// to the real start coordinates, from a canonical tangent map whose end
/// point is `end` (charts of `start`).
RMatrix real_jacobian(double j_class, const ClassicalState& start, const ClassicalState& end,
                      const CMatrix& tangent, const std::vector<Chart>& end_charts);

/// Uniform point on the product of spheres, preferred charts.
ClassicalState random_state(int n, std::mt19937_64& rng);

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = count;
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace spintrace::detail
