#include "ceal/kernels.hpp"

#include <algorithm>
#include <numeric>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace ceal::kernels {

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int thread_num() {
#if defined(_OPENMP)
  return omp_get_thread_num();
#else
  return 0;
#endif
}

void set_threads(int n) {
#if defined(_OPENMP)
  if (n <= 0) n = omp_get_num_procs();
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

std::vector<std::size_t> rank_ascending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

namespace {

double sweep_one(const Csr& g, std::span<const double> in, std::span<const std::uint8_t> clamped, std::size_t i) {
  const auto nb = g.row(i);
  if (clamped[i] || nb.empty()) return in[i];
  double s = 0.0;
  for (auto j : nb) s += in[j];
  return s / static_cast<double>(nb.size());
}

}  // namespace

namespace serial {

std::vector<double> score_all(const Evaluator& evaluator, std::span<const Configuration> configs) {
  std::vector<double> out(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) out[i] = evaluator.score(configs[i]);
  return out;
}

std::vector<double> predict_all(const SurrogateModel& model, const std::vector<std::vector<double>>& rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = model.predict(rows[i]);
  return out;
}

std::vector<double> propagate_sweep(const Csr& graph, std::span<const double> in, std::span<const std::uint8_t> clamped) {
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sweep_one(graph, in, clamped, i);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> score_all(const Evaluator& evaluator, std::span<const Configuration> configs) {
  std::vector<double> out(configs.size());
  for_each_index(configs.size(), [&](std::size_t i) { out[i] = evaluator.score(configs[i]); });
  return out;
}

std::vector<double> predict_all(const SurrogateModel& model, const std::vector<std::vector<double>>& rows) {
  std::vector<double> out(rows.size());
  for_each_index(rows.size(), [&](std::size_t i) { out[i] = model.predict(rows[i]); });
  return out;
}

std::vector<double> propagate_sweep(const Csr& graph, std::span<const double> in, std::span<const std::uint8_t> clamped) {
  std::vector<double> out(in.size());
  for_each_index(in.size(), [&](std::size_t i) { out[i] = sweep_one(graph, in, clamped, i); });
  return out;
}

}  // namespace parallel

}  // namespace ceal::kernels
