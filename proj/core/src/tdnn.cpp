#include <cmath>
#include <numeric>
#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/models.hpp"
#include "tsxfidel/rng.hpp"

namespace tsxfidel::models {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Forward pass keeping every layer's post-activation output.
void forward(std::span<const DenseLayer> layers, std::span<const double> input,
             std::vector<std::vector<double>>& acts) {
  acts.resize(layers.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const auto& in = acts[l];
    auto& out = acts[l + 1];
    out.resize(layer.outputs());
    for (std::size_t o = 0; o < layer.outputs(); ++o) {
      const auto w = layer.weights.row(o);
      double z = layer.bias[o];
      for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * in[i];
      out[o] = layer.activation == Activation::kSigmoid ? sigmoid(z) : z;
    }
  }
}

// Accumulates the MSE gradient of the given rows into `grad` (parameters()
// order) and returns the summed squared error.
double accumulate_gradient(std::span<const DenseLayer> layers, const Matrix& inputs,
                           const Matrix& targets, std::span<const std::size_t> rows,
                           std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<std::size_t> offset(layers.size());
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = total;
    total += layers[l].weights.size() + layers[l].bias.size();
  }
  const double scale = 2.0 / static_cast<double>(rows.size() * targets.cols());
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  std::vector<double> prev_delta;
  double sse = 0.0;
  for (std::size_t r : rows) {
    forward(layers, inputs.row(r), acts);
    const auto& out = acts.back();
    delta.resize(out.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
      const double e = out[o] - targets(r, o);
      sse += e * e;
      delta[o] = scale * e;
    }
    for (std::size_t l = layers.size(); l-- > 0;) {
      const DenseLayer& layer = layers[l];
      const auto& a_out = acts[l + 1];
      const auto& a_in = acts[l];
      if (layer.activation == Activation::kSigmoid) {
        for (std::size_t o = 0; o < delta.size(); ++o) delta[o] *= a_out[o] * (1.0 - a_out[o]);
      }
      double* gw = grad.data() + offset[l];
      double* gb = gw + layer.weights.size();
      const std::size_t n_in = layer.inputs();
      for (std::size_t o = 0; o < delta.size(); ++o) {
        const double d = delta[o];
        double* row = gw + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) row[i] += d * a_in[i];
        gb[o] += d;
      }
      if (l == 0) break;
      prev_delta.assign(n_in, 0.0);
      for (std::size_t o = 0; o < delta.size(); ++o) {
        const auto w = layer.weights.row(o);
        for (std::size_t i = 0; i < n_in; ++i) prev_delta[i] += w[i] * delta[o];
      }
      delta.swap(prev_delta);
    }
  }
  return sse;
}

}  // namespace

TdnnModel::TdnnModel(std::size_t features, std::size_t window_len, std::vector<DenseLayer> layers)
    : ForecastModel(features, window_len, layers.empty() ? 1 : layers.back().outputs()),
      layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "network needs at least one layer");
  }
  std::size_t width = input_size();
  for (const auto& layer : layers_) {
    if (layer.inputs() != width || layer.bias.size() != layer.outputs()) {
      throw Error(ErrorCode::kShapeMismatch, "layer widths do not chain");
    }
    width = layer.outputs();
  }
}

TdnnModel TdnnModel::initialized(std::size_t features, std::size_t window_len,
                                 std::size_t horizons, std::span<const std::size_t> hidden,
                                 double init_scale, std::uint64_t seed) {
  Rng rng = make_rng(stream_key({seed, hash_string("tdnn_init")}));
  std::uniform_real_distribution<double> u(-init_scale, init_scale);
  std::vector<DenseLayer> layers;
  std::size_t width = features * window_len;
  auto add = [&](std::size_t out, Activation act) {
    DenseLayer layer;
    layer.weights = Matrix(out, width);
    for (double& w : layer.weights.flat()) w = u(rng);
    layer.bias.resize(out);
    for (double& b : layer.bias) b = u(rng);
    layer.activation = act;
    layers.push_back(std::move(layer));
    width = out;
  };
  for (std::size_t h : hidden) add(h, Activation::kSigmoid);
  add(horizons, Activation::kLinear);
  return TdnnModel(features, window_len, std::move(layers));
}

std::size_t TdnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> TdnnModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.flat().begin(), l.weights.flat().end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void TdnnModel::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter vector has wrong length");
  }
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& w : l.weights.flat()) w = params[k++];
    for (double& b : l.bias) b = params[k++];
  }
}

void TdnnModel::predict_flat(std::span<const double> input, std::span<double> out) const {
  std::vector<std::vector<double>> acts;
  forward(layers_, input, acts);
  std::copy(acts.back().begin(), acts.back().end(), out.begin());
}

double TdnnModel::mse_loss(const Matrix& inputs, const Matrix& targets) const {
  if (inputs.rows() != targets.rows() || inputs.cols() != input_size() ||
      targets.cols() != horizons() || inputs.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "batch shape does not match network");
  }
  std::vector<std::vector<double>> acts;
  double sse = 0.0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    forward(layers_, inputs.row(r), acts);
    for (std::size_t o = 0; o < targets.cols(); ++o) {
      const double e = acts.back()[o] - targets(r, o);
      sse += e * e;
    }
  }
  return sse / static_cast<double>(inputs.rows() * targets.cols());
}

std::vector<double> TdnnModel::mse_gradient(const Matrix& inputs, const Matrix& targets) const {
  if (inputs.rows() != targets.rows() || inputs.cols() != input_size() ||
      targets.cols() != horizons() || inputs.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "batch shape does not match network");
  }
  std::vector<std::size_t> rows(inputs.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad(parameter_count());
  accumulate_gradient(layers_, inputs, targets, rows, grad);
  return grad;
}

TdnnModel fit_tdnn(std::span<const dataset::WindowInstance> train, const TrainConfig& config,
                   TdnnTrace* trace) {
  if (train.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, "tdnn needs at least one training window");
  }
  const AdamParams& adam = config.adam;
  if (!(adam.alpha > 0.0 && adam.epsilon > 0.0 && adam.beta1 > 0.0 && adam.beta1 < 1.0 &&
        adam.beta2 > 0.0 && adam.beta2 < 1.0) ||
      config.batch_size == 0 || config.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid tdnn training configuration");
  }
  const Matrix inputs = stack_inputs(train);
  const Matrix targets = stack_targets(train);
  TdnnModel model = TdnnModel::initialized(train.front().x.rows(), train.front().x.cols(),
                                           targets.cols(), config.hidden, config.init_scale,
                                           config.seed);
  std::vector<double> params = model.parameters();
  std::vector<double> grad(params.size());
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<std::size_t> order(inputs.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(stream_key({config.seed, hash_string("tdnn_shuffle")}));
  std::uint64_t step = 0;
  std::vector<DenseLayer> layers(model.layers().begin(), model.layers().end());
  auto sync_layers = [&] {
    std::size_t k = 0;
    for (auto& l : layers) {
      for (double& w : l.weights.flat()) w = params[k++];
      for (double& b : l.bias) b = params[k++];
    }
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      accumulate_gradient(layers, inputs, targets, batch, grad);
      ++step;
      const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = adam.beta1 * m[k] + (1.0 - adam.beta1) * grad[k];
        v[k] = adam.beta2 * v[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
        params[k] -= adam.alpha * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + adam.epsilon);
      }
      sync_layers();
    }
    model.set_parameters(params);
    const double rmse = std::sqrt(model.mse_loss(inputs, targets));
    if (!std::isfinite(rmse)) {
      throw Error(ErrorCode::kDivergedLoss, "training loss became non-finite at epoch " +
                                                std::to_string(epoch + 1));
    }
    if (trace) trace->epoch_rmse.push_back(rmse);
  }
  model.set_parameters(params);
  return model;
}

}  // namespace tsxfidel::models
