#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/models.hpp"
#include "tsxfidel/rng.hpp"

namespace tsxfidel::metrics {

using explainers::Direction;
using explainers::Ranking;

// Sequential Monte-Carlo stopping rule: after each draw with n >= min_n,
// stop once z * s / sqrt(n) < threshold, or at max_n.
struct MCConfig {
  double threshold = 0.0005;
  double z = 1.96;
  std::size_t min_n = 30;
  std::size_t max_n = 10000;
};

// Two-sided normal quantile for a confidence level, rounded to two decimals
// as in z-tables (0.95 -> 1.96).
double z_score_for(double confidence);

struct MCEstimate {
  double mean = 0.0;
  double margin_of_error = 0.0;
  std::size_t n_samples = 0;
  bool converged = false;
};

// Draws sampler(0), sampler(1), ... until the stopping rule fires.
MCEstimate mc_run(const std::function<double(std::size_t)>& sampler, const MCConfig& config);

struct AblationDraw {
  Matrix x_ablated;
  std::vector<std::size_t> replaced;  // flat cell indices, in ranking order
  std::uint64_t draw_seed = 0;
};

// Replaces the first k ranked cells with independent draws from their
// feature's pool. Throws KOutOfRange unless 1 <= k <= J*L.
AblationDraw ablate(const Matrix& x, const Ranking& ranking, std::size_t k,
                    const dataset::AblationPool& pool, std::uint64_t draw_seed);

// One Monte-Carlo sample of AOPCR_tau: (1/K) sum_k [F(x) - F(x without top-k)],
// with the ablation prefixes nested under one draw stream.
double aopcr_sample(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                    std::size_t horizon, std::size_t k_max, const dataset::AblationPool& pool,
                    std::uint64_t draw_seed);

struct AptSample {
  double value = 1.0;  // in {1/P, ..., 1}
  bool crossed = false;
};

// Smallest k/P whose ablated prediction crosses (1 + alpha) * F(x): below it
// for alpha < 0, above it for alpha > 0. Never crossing scores 1.0.
AptSample apt_sample(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                     std::size_t horizon, double alpha, const dataset::AblationPool& pool,
                     std::uint64_t draw_seed);

// Per-sample draw seed for (stream, sample index).
std::uint64_t sample_seed(std::uint64_t stream, std::size_t sample_index);

MCEstimate aopcr_tau(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                     std::size_t horizon, std::size_t k_max, const dataset::AblationPool& pool,
                     const MCConfig& config, std::uint64_t stream);

inline constexpr double kNearZeroPrediction = 1e-6;

struct AptEstimate {
  MCEstimate estimate;
  bool near_zero = false;  // |F(x)| below kNearZeroPrediction: not evaluated
  std::size_t never_crossed = 0;
};

AptEstimate apt_tau(const models::ForecastModel& model, const Matrix& x, const Ranking& ranking,
                    std::size_t horizon, double alpha, const dataset::AblationPool& pool,
                    const MCConfig& config, std::uint64_t stream);

// (1/t0) * sum_tau gamma^(tau-1) * value_tau, with 0^0 = 1.
double weighted_total(std::span<const double> per_horizon, double gamma);
double aopcr_total(std::span<const double> per_horizon, double gamma = 1.0);
double apt_total(std::span<const double> per_horizon, double gamma = 1.0);

// ---------------------------------------------------------------------------
// Dataset-level evaluation.

enum class Metric { kAopcr, kApt };
std::string_view to_string(Metric m);

struct MetricConfig {
  bool aopcr = true;
  bool apt = true;
  std::size_t k = 10;
  double alpha = 0.10;  // magnitude; sign follows the ranking direction
  double gamma = 1.0;
  MCConfig mc;
};

// MostPositive removal expects a drop (alpha < 0); MostNegative a rise.
double signed_alpha(double magnitude, Direction d);

struct FidelityScore {
  Metric metric = Metric::kAopcr;
  Direction direction = Direction::kMostPositive;
  double parameter = 0.0;  // K for AOPCR, signed alpha for APT
  double gamma = 1.0;
  // Per horizon: mean over windows of the window-level Monte-Carlo means;
  // margin of error is z * sd(window means) / sqrt(windows).
  std::vector<MCEstimate> per_horizon;
  std::vector<std::size_t> windows_per_horizon;
  double total = 0.0;
  // (1/t0) * sum gamma^(tau-1) * margin_tau, a bound that holds whatever the
  // correlation between horizons.
  double total_margin = 0.0;
  std::size_t windows = 0;
  std::size_t skipped = 0;  // (window, horizon) pairs excluded
  std::size_t never_crossed = 0;
};

struct SkippedWindow {
  std::string series_id;
  std::size_t t_anchor = 0;
  std::size_t horizon = 0;
  std::string metric;
  std::string direction;
  std::string reason;
};

struct DatasetEvaluation {
  std::vector<FidelityScore> scores;  // AOPCR (+, -), then APT (+, -), as enabled
  std::vector<SkippedWindow> skipped;
  // Importance matrices of the first `keep_importance` windows.
  std::vector<std::pair<std::size_t, std::vector<explainers::ImportanceMatrix>>> importance;
};

struct EvaluationContext {
  const dataset::AblationPool* pool = nullptr;
  const std::map<std::string, std::vector<double>>* global_means = nullptr;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t keep_importance = 0;
};

// Window key used for every random stream of a window.
std::uint64_t window_key(const dataset::WindowInstance& w);

// Explains every window once per horizon, evaluates both ranking directions
// for each enabled metric, averages Monte-Carlo means over windows and then
// over horizons. Window failures are recorded in `skipped`, never thrown.
// Results do not depend on `jobs`.
DatasetEvaluation evaluate_dataset(const models::ForecastModel& model,
                                   const explainers::Explainer& explainer,
                                   std::span<const dataset::WindowInstance> windows,
                                   const MetricConfig& config, const EvaluationContext& context);

}  // namespace tsxfidel::metrics
