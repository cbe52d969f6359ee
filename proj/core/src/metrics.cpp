#include <cmath>
#include <string>

#include "tsxfidel/error.hpp"
#include "tsxfidel/metrics.hpp"

namespace tsxfidel::metrics {
namespace {

void check_window(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                  const dataset::AblationPool& pool) {
  if (x.rows() != model.features() || x.cols() != model.window_len()) {
    throw Error(ErrorCode::kShapeMismatch, "window shape does not match model");
  }
  if (ranking.cells.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "ranking does not cover every window cell");
  }
  if (pool.feature_count() != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "ablation pool feature count does not match window");
  }
}

}  // namespace

double z_score_for(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
  // Solve erfc(z / sqrt 2) = 1 - confidence by bisection.
  const double tail = 1.0 - confidence;
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::round(0.5 * (lo + hi) * 100.0) / 100.0;
}

MCEstimate mc_run(const std::function<double(std::size_t)>& sampler, const MCConfig& config) {
  if (config.min_n < 2 || config.max_n < config.min_n || !(config.threshold > 0.0) ||
      !(config.z > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Monte-Carlo config needs 2 <= min_n <= max_n, threshold > 0 and z > 0");
  }
  // Welford running mean and sum of squared deviations.
  double mean = 0.0;
  double m2 = 0.0;
  MCEstimate est;
  for (std::size_t n = 1; n <= config.max_n; ++n) {
    const double x = sampler(n - 1);
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
    est.mean = mean;
    est.n_samples = n;
    if (n < config.min_n) continue;
    const double sd = std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)));
    est.margin_of_error = config.z * sd / std::sqrt(static_cast<double>(n));
    if (est.margin_of_error < config.threshold) {
      est.converged = true;
      break;
    }
  }
  return est;
}

std::uint64_t sample_seed(std::uint64_t stream, std::size_t sample_index) {
  return stream_key({stream, sample_index});
}

AblationDraw ablate(const Matrix& x, const Ranking& ranking, std::size_t k,
                    const dataset::AblationPool& pool, std::uint64_t draw_seed) {
  if (k < 1 || k > x.size() || k > ranking.cells.size()) {
    throw Error(ErrorCode::kKOutOfRange, "k = " + std::to_string(k) + " outside [1, " +
                                             std::to_string(x.size()) + "]");
  }
  if (pool.feature_count() != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "ablation pool feature count does not match window");
  }
  Rng rng = make_rng(draw_seed);
  AblationDraw draw{x, {}, draw_seed};
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t cell = ranking.cells[i];
    draw.x_ablated.at_flat(cell) = pool.draw(cell / x.cols(), rng);
    draw.replaced.push_back(cell);
  }
  return draw;
}

double aopcr_sample(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                    std::size_t horizon, std::size_t k_max, const dataset::AblationPool& pool,
                    std::uint64_t draw_seed) {
  check_window(model, x, ranking, pool);
  if (k_max < 1 || k_max > x.size()) {
    throw Error(ErrorCode::kKOutOfRange, "K = " + std::to_string(k_max) + " outside [1, " +
                                             std::to_string(x.size()) + "]");
  }
  const double fx = model.predict_horizon(x, horizon);
  Rng rng = make_rng(draw_seed);
  Matrix work = x;
  double sum = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const std::size_t cell = ranking.cells[k];
    work.at_flat(cell) = pool.draw(cell / x.cols(), rng);
    sum += fx - model.predict_horizon(work, horizon);
  }
  return sum / static_cast<double>(k_max);
}

AptSample apt_sample(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                     std::size_t horizon, double alpha, const dataset::AblationPool& pool,
                     std::uint64_t draw_seed) {
  check_window(model, x, ranking, pool);
  if (alpha == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "APT needs a non-zero alpha");
  }
  const double threshold = (1.0 + alpha) * model.predict_horizon(x, horizon);
  const std::size_t P = x.size();
  Rng rng = make_rng(draw_seed);
  Matrix work = x;
  for (std::size_t k = 0; k < P; ++k) {
    const std::size_t cell = ranking.cells[k];
    work.at_flat(cell) = pool.draw(cell / x.cols(), rng);
    const double f = model.predict_horizon(work, horizon);
    const bool crossed = alpha < 0.0 ? f < threshold : f > threshold;
    if (crossed) {
      return {static_cast<double>(k + 1) / static_cast<double>(P), true};
    }
  }
  return {1.0, false};
}

MCEstimate aopcr_tau(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                     std::size_t horizon, std::size_t k_max, const dataset::AblationPool& pool,
                     const MCConfig& config, std::uint64_t stream) {
  return mc_run(
      [&](std::size_t i) {
        return aopcr_sample(model, x, ranking, horizon, k_max, pool, sample_seed(stream, i));
      },
      config);
}

AptEstimate apt_tau(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                    std::size_t horizon, double alpha, const dataset::AblationPool& pool,
                    const MCConfig& config, std::uint64_t stream) {
  AptEstimate out;
  if (std::abs(model.predict_horizon(x, horizon)) < kNearZeroPrediction) {
    out.near_zero = true;
    return out;
  }
  out.estimate = mc_run(
      [&](std::size_t i) {
        const auto s = apt_sample(model, x, ranking, horizon, alpha, pool, sample_seed(stream, i));
        if (!s.crossed) ++out.never_crossed;
        return s.value;
      },
      config);
  return out;
}

double weighted_total(std::span<const double> per_horizon, double gamma) {
  if (per_horizon.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no horizons to aggregate");
  }
  double sum = 0.0;
  double weight = 1.0;  // gamma^0 = 1, including gamma = 0
  for (double v : per_horizon) {
    sum += weight * v;
    weight *= gamma;
  }
  return sum / static_cast<double>(per_horizon.size());
}

double aopcr_total(std::span<const double> per_horizon, double gamma) {
  return weighted_total(per_horizon, gamma);
}

double apt_total(std::span<const double> per_horizon, double gamma) {
  return weighted_total(per_horizon, gamma);
}

double signed_alpha(double magnitude, Direction d) {
  const double a = std::abs(magnitude);
  return d == Direction::kMostPositive ? -a : a;
}

std::string_view to_string(Metric m) { return m == Metric::kAopcr ? "aopcr" : "apt"; }

}  // namespace tsxfidel::metrics
