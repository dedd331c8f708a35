#include "ceal/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "ceal/error.hpp"
#include "ceal/kernels.hpp"
#include "ceal/rng.hpp"

namespace ceal {

void SurrogateHyperparams::validate() const {
  if (tree_count == 0) throw ConfigError("surrogate: tree_count must be positive");
  if (max_depth == 0) throw ConfigError("surrogate: max_depth must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("surrogate: learning_rate must be in (0,1]");
  if (min_samples_leaf == 0) throw ConfigError("surrogate: min_samples_leaf must be positive");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ConfigError("surrogate: subsample_fraction must be in (0,1]");
  }
}

double RegressionTree::leaf_value(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

// Mean that is exact when all inputs are equal.
double running_mean(std::span<const std::size_t> rows, const std::vector<double>& v) {
  double m = 0.0;
  std::size_t k = 0;
  for (auto r : rows) {
    ++k;
    m += (v[r] - m) / static_cast<double>(k);
  }
  return m;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& residual,
              const SurrogateHyperparams& hp)
      : x_(x), r_(residual), hp_(hp) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].value = running_mean(rows, r_);

    const std::size_t n = rows.size();
    if (depth >= hp_.max_depth || n < 2 * hp_.min_samples_leaf) return id;

    double total = 0.0, sumsq = 0.0;
    for (auto i : rows) {
      total += r_[i];
      sumsq += r_[i] * r_[i];
    }
    const double parent = total * total / static_cast<double>(n);
    const double tol = 1e-12 * std::max(sumsq, 1e-300);

    double best_gain = tol;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> sorted = rows;
    const std::size_t d = x_.empty() ? 0 : x_[rows.front()].size();
    for (std::size_t f = 0; f < d; ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_[a][f] != x_[b][f] ? x_[a][f] < x_[b][f] : a < b;
      });
      double left = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left += r_[sorted[k]];
        const double lo = x_[sorted[k]][f];
        const double hi = x_[sorted[k + 1]][f];
        const std::size_t nl = k + 1, nr = n - nl;
        if (!(lo < hi) || nl < hp_.min_samples_leaf || nr < hp_.min_samples_leaf) continue;
        const double right = total - left;
        const double gain =
            left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::int32_t>(f);
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lrows, rrows;
    for (auto i : rows) {
      (x_[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(i);
    }
    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    const auto l = grow(std::move(lrows), depth + 1);
    const auto r = grow(std::move(rrows), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& r_;
  const SurrogateHyperparams& hp_;
  RegressionTree tree_;
};

double mse(const std::vector<double>& y, const std::vector<double>& pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

SurrogateModel fit(const TrainingSet& data, const SurrogateHyperparams& hp) {
  hp.validate();
  if (data.empty()) throw ConfigError("surrogate: cannot fit an empty training set");
  const std::size_t d = data.rows.front().features.size();
  for (const auto& row : data.rows) {
    if (row.features.size() != d) throw StructuralError("surrogate: training rows have differing feature counts");
    for (double v : row.features) {
      if (!std::isfinite(v)) throw ConfigError("surrogate: non-finite feature value");
    }
    if (!std::isfinite(row.target)) throw ConfigError("surrogate: non-finite target");
    if (hp.log_target && !(row.target > 0.0)) throw ConfigError("surrogate: log_target needs positive targets");
  }

  // Canonical row order: the fit depends only on the multiset of rows.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = data.rows[a];
    const auto& rb = data.rows[b];
    if (ra.features != rb.features) return ra.features < rb.features;
    return ra.target < rb.target;
  });

  const std::size_t n = data.size();
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  x.reserve(n);
  y.reserve(n);
  for (auto i : order) {
    x.push_back(data.rows[i].features);
    y.push_back(hp.log_target ? std::log(data.rows[i].target) : data.rows[i].target);
  }

  SurrogateModel model;
  model.hp_ = hp;
  model.feature_count_ = d;
  model.training_rows_ = n;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  model.base_ = running_mean(all, y);

  std::vector<double> pred(n, model.base_);
  std::vector<double> residual(n);
  model.loss_history_.push_back(mse(y, pred));

  Rng rng(hp.seed);
  const std::size_t sample_n =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(hp.subsample_fraction * static_cast<double>(n))));
  TreeBuilder builder(x, residual, hp);
  model.trees_.reserve(hp.tree_count);

  for (std::size_t t = 0; t < hp.tree_count; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];

    std::vector<std::size_t> rows = all;
    if (sample_n < n) {
      for (std::size_t k = 0; k < sample_n; ++k) std::swap(rows[k], rows[k + uniform_index(rng, n - k)]);
      rows.resize(sample_n);
      std::sort(rows.begin(), rows.end());
    }
    auto tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) pred[i] += hp.learning_rate * tree.leaf_value(x[i]);
    model.trees_.push_back(std::move(tree));
    model.loss_history_.push_back(mse(y, pred));
  }
  return model;
}

SurrogateModel refit(const SurrogateModel& /*prior*/, const TrainingSet& cumulative, const SurrogateHyperparams& hp) {
  return fit(cumulative, hp);
}

double SurrogateModel::raw(std::span<const double> features) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.leaf_value(features);
  return base_ + hp_.learning_rate * s;
}

double SurrogateModel::predict(std::span<const double> features) const {
  if (features.size() != feature_count_) {
    throw StructuralError(fmt::format("surrogate: expected {} features, got {}", feature_count_, features.size()));
  }
  const double r = raw(features);
  return hp_.log_target ? std::exp(r) : r;
}

std::vector<double> SurrogateModel::predict_all(const std::vector<std::vector<double>>& rows) const {
  return kernels::parallel::predict_all(*this, rows);
}

nlohmann::json SurrogateModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {
      {"format", "ceal-surrogate"},
      {"version", 1},
      {"hyperparams",
       {{"tree_count", hp_.tree_count},
        {"max_depth", hp_.max_depth},
        {"learning_rate", hp_.learning_rate},
        {"min_samples_leaf", hp_.min_samples_leaf},
        {"subsample_fraction", hp_.subsample_fraction},
        {"seed", hp_.seed},
        {"log_target", hp_.log_target}}},
      {"feature_count", feature_count_},
      {"training_rows", training_rows_},
      {"base", base_},
      {"loss_history", loss_history_},
      {"trees", std::move(trees)},
  };
}

SurrogateModel SurrogateModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ceal-surrogate") throw ConfigError("not a ceal-surrogate document");
  if (j.at("version").get<int>() != 1) throw ConfigError("unsupported ceal-surrogate version");
  SurrogateModel m;
  const auto& h = j.at("hyperparams");
  m.hp_.tree_count = h.at("tree_count").get<std::size_t>();
  m.hp_.max_depth = h.at("max_depth").get<std::size_t>();
  m.hp_.learning_rate = h.at("learning_rate").get<double>();
  m.hp_.min_samples_leaf = h.at("min_samples_leaf").get<std::size_t>();
  m.hp_.subsample_fraction = h.at("subsample_fraction").get<double>();
  m.hp_.seed = h.at("seed").get<std::uint64_t>();
  m.hp_.log_target = h.at("log_target").get<bool>();
  m.feature_count_ = j.at("feature_count").get<std::size_t>();
  m.training_rows_ = j.at("training_rows").get<std::size_t>();
  m.base_ = j.at("base").get<double>();
  m.loss_history_ = j.at("loss_history").get<std::vector<double>>();
  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    for (const auto& jn : jt) {
      RegressionTree::Node n;
      n.feature = jn.at(0).get<std::int32_t>();
      n.threshold = jn.at(1).get<double>();
      n.left = jn.at(2).get<std::int32_t>();
      n.right = jn.at(3).get<std::int32_t>();
      n.value = jn.at(4).get<double>();
      t.nodes.push_back(n);
    }
    const auto count = static_cast<std::int32_t>(t.nodes.size());
    if (count == 0) throw ConfigError("ceal-surrogate: empty tree");
    for (const auto& n : t.nodes) {
      if (n.feature >= 0 && (n.feature >= static_cast<std::int32_t>(m.feature_count_) || n.left <= 0 ||
                             n.right <= 0 || n.left >= count || n.right >= count)) {
        throw ConfigError("ceal-surrogate: malformed tree node");
      }
    }
    m.trees_.push_back(std::move(t));
  }
  return m;
}

void SurrogateModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path);
  out << to_json().dump(1) << '\n';
}

SurrogateModel SurrogateModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model file " + path);
  return from_json(nlohmann::json::parse(in));
}

}  // namespace ceal
