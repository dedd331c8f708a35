#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ceal/kernels.hpp"
#include "ceal/tuner.hpp"

namespace ceal {

/// Pool entries joined when they differ in exactly one parameter by one
/// step of that parameter's domain.
kernels::Csr neighbor_graph(const ParameterSpace& space, const SamplePool& pool);

/// Label propagation: labelled nodes are clamped to their label, the rest
/// start at `prior` and take `sweeps` Jacobi averaging sweeps. Isolated
/// unlabelled nodes keep the prior.
std::vector<double> propagate_labels(const kernels::Csr& graph, const std::vector<std::optional<double>>& labels,
                                     std::size_t sweeps = 10, double prior = 0.5);

/// Random sampling: m pool entries measured, one model fit.
TuningResult run_rs(const TuningProblem& problem, std::size_t m, const TunerOptions& options = {});

/// Plain batch active learning (m_r must be 0): iteration 1 is random,
/// later batches are the trained model's best predictions.
TuningResult run_al(const TuningProblem& problem, const Budget& budget, const TunerOptions& options = {});

struct GeistOptions {
  double top_fraction = 0.05;
  std::size_t sweeps = 10;
};

/// Graph-guided selection: measured entries are labelled top (1) when they
/// rank within top_fraction of the measurements so far, otherwise 0; the
/// next batch is the highest propagated scores. m_0 random bootstrap
/// picks come first (iteration 0), then `iters` batches.
TuningResult run_geist_like(const TuningProblem& problem, const Budget& budget, const GeistOptions& geist = {},
                            const TunerOptions& options = {});

/// Active learning on a model over (configuration, component predictions)
/// features, with component models built as in CEAL's first phase.
TuningResult run_alph(const TuningProblem& problem, const Budget& budget, const TunerOptions& options = {});

/// Evaluator over c concatenated with the low-fidelity model's component
/// predictions.
class StackedEvaluator final : public Evaluator {
 public:
  StackedEvaluator(std::shared_ptr<const SurrogateModel> model, std::shared_ptr<const LowFidelityModel> low)
      : model_(std::move(model)), low_(std::move(low)) {}
  double score(const Configuration& c) const override;
  static std::vector<double> features(const LowFidelityModel& low, const Configuration& c);
  const SurrogateModel& model() const { return *model_; }

 private:
  std::shared_ptr<const SurrogateModel> model_;
  std::shared_ptr<const LowFidelityModel> low_;
};

enum class Algorithm { Rs, Al, Geist, Alph, Ceal };
Algorithm parse_algorithm(const std::string& s);
std::string to_string(Algorithm a);

/// Runs `algo`. RS uses budget.m only; AL and GEIST-like spend all of m
/// on workflow runs (m_r is treated as 0).
TuningResult run_algorithm(Algorithm algo, const TuningProblem& problem, const Budget& budget,
                           const TunerOptions& options = {});

}  // namespace ceal
