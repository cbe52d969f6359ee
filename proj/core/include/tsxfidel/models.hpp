#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/matrix.hpp"

namespace tsxfidel::models {

// Multi-horizon forecaster over a J x L window. Implementations are immutable
// after fitting, so predict may be called concurrently.
class ForecastModel {
 public:
  ForecastModel(std::size_t features, std::size_t window_len, std::size_t horizons);
  virtual ~ForecastModel() = default;

  std::size_t features() const { return features_; }
  std::size_t window_len() const { return window_len_; }
  std::size_t horizons() const { return horizons_; }
  std::size_t input_size() const { return features_ * window_len_; }

  // All t0 horizons. Throws ShapeMismatch if x is not J x L.
  std::vector<double> predict(const Matrix& x) const;
  // Horizon index is zero-based.
  double predict_horizon(const Matrix& x, std::size_t horizon) const;

  virtual std::string kind() const = 0;
  virtual void save(std::ostream& out) const = 0;

 protected:
  virtual void predict_flat(std::span<const double> input, std::span<double> out) const = 0;
  virtual double predict_flat_horizon(std::span<const double> input, std::size_t horizon) const;

 private:
  void check_shape(const Matrix& x) const;

  std::size_t features_;
  std::size_t window_len_;
  std::size_t horizons_;
};

// ---------------------------------------------------------------------------
// CART regression tree.

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() : nodes_{TreeNode{}} {}
  RegressionTree(std::vector<TreeNode> nodes, int max_depth);

  static RegressionTree leaf(double value);

  // Samples with input[feature] <= threshold go left.
  double predict(std::span<const double> input) const;
  std::span<const TreeNode> nodes() const { return nodes_; }
  int max_depth() const { return max_depth_; }
  int depth() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  int max_depth_ = 0;
};

// Column-wise sample order, shared by every tree fitted on the same inputs.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& inputs);
  std::span<const std::uint32_t> order(std::size_t column) const { return order_[column]; }

 private:
  std::vector<std::vector<std::uint32_t>> order_;
};

// Greedy depth-limited tree maximizing the Friedman improvement
// w_l * w_r / (w_l + w_r) * (mean_l - mean_r)^2. Ties go to the lowest
// column, then the lowest threshold. Thresholds are midpoints between
// consecutive distinct values.
RegressionTree fit_tree(const Matrix& inputs, std::span<const double> residuals, int max_depth,
                        int min_samples_leaf = 1);
RegressionTree fit_tree(const Matrix& inputs, const SortedColumns& sorted,
                        std::span<const double> residuals, int max_depth, int min_samples_leaf);

// ---------------------------------------------------------------------------
// Gradient boosted regressor, direct strategy (one ensemble per horizon).

struct GbrParams {
  double learning_rate = 0.01;
  int n_trees = 100;
  int max_depth = 3;
  int min_samples_leaf = 1;
};

class GbrModel final : public ForecastModel {
 public:
  GbrModel(std::size_t features, std::size_t window_len, std::vector<double> intercepts,
           std::vector<std::vector<RegressionTree>> trees, double learning_rate);

  std::string kind() const override { return "gbr"; }
  void save(std::ostream& out) const override;

  double intercept(std::size_t horizon) const { return intercepts_.at(horizon); }
  std::span<const RegressionTree> trees(std::size_t horizon) const { return trees_.at(horizon); }
  double learning_rate() const { return learning_rate_; }

 protected:
  void predict_flat(std::span<const double> input, std::span<double> out) const override;
  double predict_flat_horizon(std::span<const double> input, std::size_t horizon) const override;

 private:
  std::vector<double> intercepts_;
  std::vector<std::vector<RegressionTree>> trees_;
  double learning_rate_;
};

// Training MSE per horizon after the intercept and after every boosting round
// (n_trees + 1 entries per horizon).
using GbrTrace = std::vector<std::vector<double>>;

GbrModel fit_gbr(std::span<const dataset::WindowInstance> train, const GbrParams& params,
                 GbrTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Time-delay neural network: dense sigmoid hidden layers, linear output (MIMO).

enum class Activation { kSigmoid, kLinear };

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kSigmoid;

  std::size_t inputs() const { return weights.cols(); }
  std::size_t outputs() const { return weights.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

struct AdamParams {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 300;
  std::size_t batch_size = 32;
  AdamParams adam;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64};
  double init_scale = 0.05;  // weights ~ U(-init_scale, init_scale)
};

class TdnnModel final : public ForecastModel {
 public:
  TdnnModel(std::size_t features, std::size_t window_len, std::vector<DenseLayer> layers);

  // Fresh network: every weight and bias drawn from U(-init_scale, init_scale).
  static TdnnModel initialized(std::size_t features, std::size_t window_len, std::size_t horizons,
                               std::span<const std::size_t> hidden, double init_scale,
                               std::uint64_t seed);

  std::string kind() const override { return "tdnn"; }
  void save(std::ostream& out) const override;

  std::span<const DenseLayer> layers() const { return layers_; }
  std::size_t parameter_count() const;
  // Flattened as, per layer, row-major weights then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  // Mean squared error over every (sample, horizon) of a batch. Rows of
  // `inputs` are flattened windows; rows of `targets` are t0 targets.
  double mse_loss(const Matrix& inputs, const Matrix& targets) const;
  // Gradient of mse_loss in parameters() order.
  std::vector<double> mse_gradient(const Matrix& inputs, const Matrix& targets) const;

 protected:
  void predict_flat(std::span<const double> input, std::span<double> out) const override;

 private:
  std::vector<DenseLayer> layers_;
};

struct TdnnTrace {
  std::vector<double> epoch_rmse;  // training RMSE after each epoch
};

TdnnModel fit_tdnn(std::span<const dataset::WindowInstance> train, const TrainConfig& config,
                   TdnnTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Performance scores.

double nrmse(std::span<const double> y, std::span<const double> yhat);
double nd(std::span<const double> y, std::span<const double> yhat);

struct PerformanceScores {
  double nrmse = 0.0;
  double nd = 0.0;
};
// Scores over every (window, horizon) pair on the normalized scale.
PerformanceScores evaluate_performance(const ForecastModel& model,
                                       std::span<const dataset::WindowInstance> windows);

// ---------------------------------------------------------------------------
// Serialization: versioned text format with hexfloat numbers (exact round trip).

void save_model(const ForecastModel& model, std::ostream& out);
std::unique_ptr<ForecastModel> load_model(std::istream& in);

// Flattened windows as an N x (J*L) matrix and their N x t0 targets.
Matrix stack_inputs(std::span<const dataset::WindowInstance> windows);
Matrix stack_targets(std::span<const dataset::WindowInstance> windows);

}  // namespace tsxfidel::models
