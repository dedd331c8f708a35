#pragma once

// Data-parallel inner loops. kernels::serial holds the reference versions,
// kernels::parallel the OpenMP ones; outputs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#include "ceal/config_space.hpp"
#include "ceal/evaluator.hpp"
#include "ceal/surrogate.hpp"

namespace ceal::kernels {

int max_threads();
int thread_num();
/// n <= 0 restores the OpenMP default.
void set_threads(int n);

/// Undirected graph in compressed-row form.
struct Csr {
  std::vector<std::size_t> offsets;  // size = nodes + 1
  std::vector<std::size_t> neighbors;

  std::size_t nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::size_t> row(std::size_t i) const {
    return {neighbors.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

/// Indices sorted by (score ascending, index ascending).
std::vector<std::size_t> rank_ascending(std::span<const double> scores);

namespace serial {

std::vector<double> score_all(const Evaluator& evaluator, std::span<const Configuration> configs);
std::vector<double> predict_all(const SurrogateModel& model, const std::vector<std::vector<double>>& rows);
/// One Jacobi averaging sweep: clamped nodes keep their value, isolated
/// nodes keep theirs, every other node takes the mean of its neighbours.
std::vector<double> propagate_sweep(const Csr& graph, std::span<const double> in, std::span<const std::uint8_t> clamped);

template <class Fn>
void for_each_index(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace serial

namespace parallel {

std::vector<double> score_all(const Evaluator& evaluator, std::span<const Configuration> configs);
std::vector<double> predict_all(const SurrogateModel& model, const std::vector<std::vector<double>>& rows);
std::vector<double> propagate_sweep(const Csr& graph, std::span<const double> in, std::span<const std::uint8_t> clamped);

/// `fn(i)` for i in [0, n) across OpenMP threads. fn must only write
/// state owned by index i. The first exception thrown by any fn is
/// rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t n, Fn&& fn) {
  const auto count = static_cast<std::int64_t>(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(ceal_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace parallel

}  // namespace ceal::kernels
