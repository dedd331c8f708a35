#include "ceal/combiner.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"

namespace ceal {

MetricKind parse_metric(const std::string& name) {
  if (name == "execution_time") return MetricKind::ExecutionTime;
  if (name == "computer_time") return MetricKind::ComputerTime;
  if (name == "throughput") return MetricKind::Throughput;
  throw ConfigError("unknown metric '" + name + "'");
}

std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::ExecutionTime: return "execution_time";
    case MetricKind::ComputerTime: return "computer_time";
    case MetricKind::Throughput: return "throughput";
  }
  return "?";
}

std::string to_string(CombinationFunction f) {
  switch (f) {
    case CombinationFunction::Max: return "max";
    case CombinationFunction::Min: return "min";
    case CombinationFunction::Sum: return "sum";
  }
  return "?";
}

CombinationFunction choose_function(MetricKind metric) {
  switch (metric) {
    case MetricKind::ExecutionTime: return CombinationFunction::Max;
    case MetricKind::ComputerTime: return CombinationFunction::Sum;
    case MetricKind::Throughput: return CombinationFunction::Min;
  }
  throw ConfigError("unknown metric");
}

LowFidelityModel::LowFidelityModel(std::vector<std::shared_ptr<const SurrogateModel>> models,
                                   std::vector<ComponentBinding> bindings, CombinationFunction function,
                                   std::vector<double> fixed_offsets)
    : models_(std::move(models)), bindings_(std::move(bindings)), function_(function), offsets_(std::move(fixed_offsets)) {
  if (models_.size() != bindings_.size()) {
    throw StructuralError(
        fmt::format("low-fidelity model: {} component models for {} bindings", models_.size(), bindings_.size()));
  }
  if (models_.empty() && offsets_.empty()) throw StructuralError("low-fidelity model needs at least one component");
  for (std::size_t j = 0; j < models_.size(); ++j) {
    if (!models_[j]) throw StructuralError("low-fidelity model: null component model");
    if (models_[j]->feature_count() != bindings_[j].indices.size()) {
      throw StructuralError(fmt::format("component model {} expects {} features but binding has {}", j,
                                        models_[j]->feature_count(), bindings_[j].indices.size()));
    }
  }
}

std::vector<double> LowFidelityModel::component_predictions(const Configuration& c) const {
  std::vector<double> out;
  out.reserve(models_.size());
  for (std::size_t j = 0; j < models_.size(); ++j) out.push_back(models_[j]->predict(project(c, bindings_[j]).values));
  return out;
}

double LowFidelityModel::combine(std::span<const double> predictions) const {
  bool first = true;
  double acc = 0.0;
  auto fold = [&](double v) {
    if (first) {
      acc = v;
      first = false;
      return;
    }
    switch (function_) {
      case CombinationFunction::Max: acc = std::max(acc, v); break;
      case CombinationFunction::Min: acc = std::min(acc, v); break;
      case CombinationFunction::Sum: acc += v; break;
    }
  };
  for (double p : predictions) fold(p);
  for (double o : offsets_) fold(o);
  return acc;
}

double LowFidelityModel::score(const Configuration& c) const {
  const auto preds = component_predictions(c);
  return combine(preds);
}

namespace {

std::vector<RankedEntry> rank_indices(const Evaluator& evaluator, const SamplePool& pool,
                                      std::vector<std::size_t> indices, bool ascending) {
  std::vector<Configuration> configs;
  configs.reserve(indices.size());
  for (auto i : indices) configs.push_back(pool[i]);
  auto scores = kernels::parallel::score_all(evaluator, configs);
  std::vector<double> keys = scores;
  if (!ascending) {
    for (auto& k : keys) k = -k;
  }
  // indices are ascending, so ties in rank_ascending resolve by pool index
  const auto order = kernels::rank_ascending(keys);
  std::vector<RankedEntry> out;
  out.reserve(order.size());
  for (auto k : order) out.push_back({indices[k], scores[k]});
  return out;
}

}  // namespace

std::vector<RankedEntry> rank_pool(const Evaluator& evaluator, const SamplePool& pool, bool ascending) {
  return rank_indices(evaluator, pool, pool.remaining_indices(), ascending);
}

std::vector<RankedEntry> rank_all(const Evaluator& evaluator, const SamplePool& pool, bool ascending) {
  std::vector<std::size_t> all(pool.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return rank_indices(evaluator, pool, std::move(all), ascending);
}

}  // namespace ceal
