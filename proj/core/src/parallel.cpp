#include "qp/parallel.hpp"

#include <algorithm>
#include <mutex>
#include <thread>
#include <vector>

namespace qp {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(count, threads < 1 ? 1 : static_cast<std::size_t>(threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = count * w / workers;
    const std::size_t hi = count * (w + 1) / workers;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

double tree_sum_impl(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t mid = n / 2;
  return tree_sum_impl(v, mid) + tree_sum_impl(v + mid, n - mid);
}

}  // namespace

double tree_sum(std::span<const double> values) {
  return tree_sum_impl(values.data(), values.size());
}

double tree_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return tree_sum(values) / static_cast<double>(values.size());
}

}  // namespace qp
