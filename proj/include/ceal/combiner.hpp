#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ceal/config_space.hpp"
#include "ceal/evaluator.hpp"
#include "ceal/surrogate.hpp"

namespace ceal {

enum class MetricKind { ExecutionTime, ComputerTime, Throughput };
enum class CombinationFunction { Max, Min, Sum };

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind m);
std::string to_string(CombinationFunction f);

/// Bottleneck metrics combine with max (time) or min (throughput);
/// aggregate metrics combine with sum.
CombinationFunction choose_function(MetricKind metric);

/// Throughput is the only higher-is-better metric.
inline bool lower_is_better(MetricKind m) { return m != MetricKind::Throughput; }

/// Scores a workflow configuration by combining per-component model
/// predictions with a fixed elementary function. Components without
/// tunable parameters enter as constant offsets.
class LowFidelityModel final : public Evaluator {
 public:
  LowFidelityModel(std::vector<std::shared_ptr<const SurrogateModel>> models, std::vector<ComponentBinding> bindings,
                   CombinationFunction function, std::vector<double> fixed_offsets = {});

  double score(const Configuration& c) const override;

  /// Per-component predictions for `c`, in binding order.
  std::vector<double> component_predictions(const Configuration& c) const;

  /// The combination applied to already-computed component predictions.
  double combine(std::span<const double> predictions) const;

  CombinationFunction function() const { return function_; }
  const std::vector<ComponentBinding>& bindings() const { return bindings_; }
  const std::vector<double>& fixed_offsets() const { return offsets_; }

 private:
  std::vector<std::shared_ptr<const SurrogateModel>> models_;
  std::vector<ComponentBinding> bindings_;
  CombinationFunction function_;
  std::vector<double> offsets_;
};

struct RankedEntry {
  std::size_t pool_index = 0;
  double score = 0.0;
};

/// Remaining pool entries ordered best-first (ascending score unless
/// `ascending` is false), ties by pool index.
std::vector<RankedEntry> rank_pool(const Evaluator& evaluator, const SamplePool& pool, bool ascending = true);

/// As rank_pool, but over every pool entry including consumed ones.
std::vector<RankedEntry> rank_all(const Evaluator& evaluator, const SamplePool& pool, bool ascending = true);

}  // namespace ceal
