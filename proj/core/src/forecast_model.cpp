#include <cmath>
#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::models {

ForecastModel::ForecastModel(std::size_t features, std::size_t window_len, std::size_t horizons)
    : features_(features), window_len_(window_len), horizons_(horizons) {
  if (features == 0 || window_len == 0 || horizons == 0) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be positive");
  }
}

void ForecastModel::check_shape(const Matrix& x) const {
  if (x.rows() != features_ || x.cols() != window_len_) {
    throw Error(ErrorCode::kShapeMismatch,
                "model expects " + std::to_string(features_) + "x" + std::to_string(window_len_) +
                    " window, got " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

std::vector<double> ForecastModel::predict(const Matrix& x) const {
  check_shape(x);
  std::vector<double> out(horizons_);
  predict_flat(x.flat(), out);
  return out;
}

double ForecastModel::predict_horizon(const Matrix& x, std::size_t horizon) const {
  check_shape(x);
  if (horizon >= horizons_) {
    throw Error(ErrorCode::kInvalidArgument, "horizon " + std::to_string(horizon) +
                                                 " out of range [0, " + std::to_string(horizons_) +
                                                 ")");
  }
  return predict_flat_horizon(x.flat(), horizon);
}

double ForecastModel::predict_flat_horizon(std::span<const double> input,
                                           std::size_t horizon) const {
  std::vector<double> out(horizons_);
  predict_flat(input, out);
  return out[horizon];
}

double nrmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty() || y.size() != yhat.size()) {
    throw Error(ErrorCode::kShapeMismatch, "nrmse needs equal, non-empty vectors");
  }
  double lo = y[0];
  double hi = y[0];
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    lo = std::min(lo, y[i]);
    hi = std::max(hi, y[i]);
    sq += (yhat[i] - y[i]) * (yhat[i] - y[i]);
  }
  if (!(hi > lo)) {
    throw Error(ErrorCode::kDegenerateDenominator, "nrmse undefined for constant y");
  }
  return std::sqrt(sq / static_cast<double>(y.size())) / (hi - lo);
}

double nd(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty() || y.size() != yhat.size()) {
    throw Error(ErrorCode::kShapeMismatch, "nd needs equal, non-empty vectors");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += std::abs(yhat[i] - y[i]);
    den += std::abs(y[i]);
  }
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kDegenerateDenominator, "nd undefined when sum |y| = 0");
  }
  return num / den;
}

PerformanceScores evaluate_performance(const ForecastModel& model,
                                       std::span<const dataset::WindowInstance> windows) {
  std::vector<double> y;
  std::vector<double> yhat;
  for (const auto& w : windows) {
    const auto p = model.predict(w.x);
    y.insert(y.end(), w.y.begin(), w.y.end());
    yhat.insert(yhat.end(), p.begin(), p.end());
  }
  return {nrmse(y, yhat), nd(y, yhat)};
}

Matrix stack_inputs(std::span<const dataset::WindowInstance> windows) {
  if (windows.empty()) return {};
  const std::size_t p = windows.front().x.size();
  Matrix m(windows.size(), p);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto flat = windows[i].x.flat();
    if (flat.size() != p) {
      throw Error(ErrorCode::kShapeMismatch, "windows have inconsistent shapes");
    }
    std::copy(flat.begin(), flat.end(), m.row(i).begin());
  }
  return m;
}

Matrix stack_targets(std::span<const dataset::WindowInstance> windows) {
  if (windows.empty()) return {};
  const std::size_t h = windows.front().y.size();
  Matrix m(windows.size(), h);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].y.size() != h) {
      throw Error(ErrorCode::kShapeMismatch, "windows have inconsistent horizons");
    }
    std::copy(windows[i].y.begin(), windows[i].y.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace tsxfidel::models
