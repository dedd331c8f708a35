#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ceal {

struct SurrogateHyperparams {
  std::size_t tree_count = 100;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
  double subsample_fraction = 1.0;
  std::uint64_t seed = 0;
  /// Fit log(target) instead of target; predictions are exponentiated back.
  bool log_target = false;

  void validate() const;
};

struct TrainingRow {
  std::vector<double> features;
  double target = 0.0;
};

struct TrainingSet {
  std::vector<TrainingRow> rows;

  void add(std::vector<double> features, double target) { rows.push_back({std::move(features), target}); }
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

/// One regression tree, stored as a flat node array rooted at index 0.
/// A row goes left when features[feature] <= threshold.
struct RegressionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // leaf output (before learning-rate scaling)
  };
  std::vector<Node> nodes;

  double leaf_value(std::span<const double> x) const;
  std::size_t depth() const;
};

/// Gradient-boosted regression trees with squared-error loss and exact
/// greedy split search.
///
///   prediction(x) = base + learning_rate * sum_t tree_t(x)
///
/// (exponentiated when fitted with log_target). Immutable after fit.
class SurrogateModel {
 public:
  double predict(std::span<const double> features) const;
  std::vector<double> predict_all(const std::vector<std::vector<double>>& rows) const;

  std::size_t feature_count() const { return feature_count_; }
  std::size_t training_rows() const { return training_rows_; }
  double base_prediction() const { return base_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const SurrogateHyperparams& hyperparams() const { return hp_; }
  /// Training mean-squared error (in fitted space) after base and after each tree.
  const std::vector<double>& loss_history() const { return loss_history_; }

  nlohmann::json to_json() const;
  static SurrogateModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static SurrogateModel load(const std::string& path);

 private:
  friend SurrogateModel fit(const TrainingSet&, const SurrogateHyperparams&);

  double raw(std::span<const double> features) const;

  SurrogateHyperparams hp_;
  std::size_t feature_count_ = 0;
  std::size_t training_rows_ = 0;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> loss_history_;
};

/// Deterministic in (data multiset, hp): rows are put in a canonical order
/// before fitting, so shuffled inputs give identical models.
SurrogateModel fit(const TrainingSet& data, const SurrogateHyperparams& hp);

/// Full retrain on the cumulative data. The prior model does not influence
/// the result; it is accepted so call sites read like an incremental update.
SurrogateModel refit(const SurrogateModel& prior, const TrainingSet& cumulative, const SurrogateHyperparams& hp);

}  // namespace ceal
