#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ceal/config_space.hpp"
#include "ceal/surrogate.hpp"

namespace ceal {

/// Anything that assigns a score to a workflow configuration. Lower scores
/// rank first. Implementations must be pure and safe to call concurrently.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double score(const Configuration& c) const = 0;
};

using EvaluatorPtr = std::shared_ptr<const Evaluator>;

/// A surrogate over the raw configuration values.
class SurrogateEvaluator final : public Evaluator {
 public:
  explicit SurrogateEvaluator(std::shared_ptr<const SurrogateModel> model) : model_(std::move(model)) {}
  double score(const Configuration& c) const override { return model_->predict(c.values); }
  const SurrogateModel& model() const { return *model_; }
  std::shared_ptr<const SurrogateModel> model_ptr() const { return model_; }

 private:
  std::shared_ptr<const SurrogateModel> model_;
};

/// Same score for everything; rankings then fall back to index order.
class ConstantEvaluator final : public Evaluator {
 public:
  explicit ConstantEvaluator(double value = 0.0) : value_(value) {}
  double score(const Configuration&) const override { return value_; }

 private:
  double value_;
};

class FunctionEvaluator final : public Evaluator {
 public:
  explicit FunctionEvaluator(std::function<double(const Configuration&)> fn) : fn_(std::move(fn)) {}
  double score(const Configuration& c) const override { return fn_(c); }

 private:
  std::function<double(const Configuration&)> fn_;
};

}  // namespace ceal
