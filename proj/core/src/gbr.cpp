#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::models {

GbrModel::GbrModel(std::size_t features, std::size_t window_len, std::vector<double> intercepts,
                   std::vector<std::vector<RegressionTree>> trees, double learning_rate)
    : ForecastModel(features, window_len, intercepts.size()),
      intercepts_(std::move(intercepts)),
      trees_(std::move(trees)),
      learning_rate_(learning_rate) {
  if (trees_.size() != intercepts_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one tree ensemble per horizon required");
  }
  for (const auto& ensemble : trees_) {
    for (const auto& tree : ensemble) {
      for (const auto& node : tree.nodes()) {
        if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= input_size()) {
          throw Error(ErrorCode::kInvalidArgument, "tree splits on a column outside the window");
        }
      }
    }
  }
}

double GbrModel::predict_flat_horizon(std::span<const double> input, std::size_t horizon) const {
  double sum = 0.0;
  for (const auto& tree : trees_[horizon]) sum += tree.predict(input);
  return intercepts_[horizon] + learning_rate_ * sum;
}

void GbrModel::predict_flat(std::span<const double> input, std::span<double> out) const {
  for (std::size_t h = 0; h < intercepts_.size(); ++h) out[h] = predict_flat_horizon(input, h);
}

GbrModel fit_gbr(std::span<const dataset::WindowInstance> train, const GbrParams& params,
                 GbrTrace* trace) {
  if (train.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, "gbr needs at least one training window");
  }
  if (params.n_trees < 0 || !(params.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gbr needs n_trees >= 0 and learning_rate > 0");
  }
  const Matrix inputs = stack_inputs(train);
  const Matrix targets = stack_targets(train);
  const SortedColumns sorted(inputs);
  const std::size_t n = inputs.rows();
  const std::size_t horizons = targets.cols();

  auto mse = [&](std::size_t h, const std::vector<double>& fitted) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = targets(i, h) - fitted[i];
      s += e * e;
    }
    return s / static_cast<double>(n);
  };

  std::vector<double> intercepts(horizons);
  std::vector<std::vector<RegressionTree>> ensembles(horizons);
  if (trace) trace->assign(horizons, {});
  std::vector<double> fitted(n);
  std::vector<double> residual(n);
  for (std::size_t h = 0; h < horizons; ++h) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += targets(i, h);
    mean /= static_cast<double>(n);
    intercepts[h] = mean;
    std::fill(fitted.begin(), fitted.end(), mean);
    if (trace) (*trace)[h].push_back(mse(h, fitted));
    auto& trees = ensembles[h];
    trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int m = 0; m < params.n_trees; ++m) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = targets(i, h) - fitted[i];
      trees.push_back(fit_tree(inputs, sorted, residual, params.max_depth, params.min_samples_leaf));
      for (std::size_t i = 0; i < n; ++i) {
        fitted[i] += params.learning_rate * trees.back().predict(inputs.row(i));
      }
      if (trace) (*trace)[h].push_back(mse(h, fitted));
    }
  }
  return GbrModel(train.front().x.rows(), train.front().x.cols(), std::move(intercepts),
                  std::move(ensembles), params.learning_rate);
}

}  // namespace tsxfidel::models
