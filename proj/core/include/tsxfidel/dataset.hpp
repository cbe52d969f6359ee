#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsxfidel/matrix.hpp"
#include "tsxfidel/rng.hpp"

namespace tsxfidel::dataset {

enum class FeatureKind { kNumeric, kCategoricalEncoded };
enum class Granularity { kHourly, kDaily };

std::int64_t granularity_seconds(Granularity g);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  bool is_target = false;
  bool is_covariate = false;

  bool operator==(const FeatureSpec&) const = default;
};

// Throws InvalidArgument unless exactly one target and names are unique.
void validate_schema(std::span<const FeatureSpec> schema);

// One observed multivariate series. `values` is T x J (row = time instant).
// Timestamps are seconds since the Unix epoch, UTC.
struct RawSeries {
  std::string series_id;
  std::vector<std::int64_t> timestamps;
  Matrix values;
  Granularity granularity = Granularity::kHourly;
  std::vector<FeatureSpec> features;

  std::size_t length() const { return values.rows(); }
  std::size_t feature_count() const { return values.cols(); }
  std::size_t target_index() const;
};

class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(double min, double max);

  double min() const { return min_; }
  double max() const { return max_; }
  double transform(double v) const { return (v - min_) / (max_ - min_); }
  double inverse(double v) const { return v * (max_ - min_) + min_; }

 private:
  double min_ = 0.0;
  double max_ = 1.0;
};

// Per-feature affine standardization fitted on training rows. Features with
// zero spread are only centered.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<bool> active;  // false for the target, which is min-max scaled instead
};

struct WindowInstance {
  Matrix x;              // J x L, column l is time slice t_anchor - (L - 1 - l)
  std::vector<double> y; // t0 future target values
  std::size_t t_anchor = 0;
  std::string series_id;
};

// Empirical marginal of each feature over all training-window cells.
class AblationPool {
 public:
  AblationPool() = default;
  explicit AblationPool(std::vector<std::vector<double>> values);

  std::size_t feature_count() const { return values_.size(); }
  std::span<const double> values(std::size_t feature) const { return values_.at(feature); }
  double draw(std::size_t feature, Rng& rng) const;
  double mean(std::size_t feature) const;

 private:
  std::vector<std::vector<double>> values_;
};

struct FramedDataset {
  std::vector<WindowInstance> train;
  std::vector<WindowInstance> test;
  std::map<std::string, MinMaxScaler> scalers;
  std::vector<FeatureSpec> feature_specs;
  AblationPool pool;
  Standardizer standardizer;
  // Per series: training-portion mean of every (transformed) feature.
  std::map<std::string, std::vector<double>> global_means;
  std::size_t window_len = 0;
  std::size_t horizons = 0;

  std::size_t feature_count() const { return feature_specs.size(); }
};

struct CsvOptions {
  std::string timestamp_column = "timestamp";
  std::string series_column = "series_id";
};

std::vector<RawSeries> load_csv(const std::filesystem::path& path,
                                std::span<const FeatureSpec> schema,
                                Granularity granularity,
                                const CsvOptions& options = {});

std::int64_t parse_iso8601(std::string_view text);

// Calendar fields of a UTC instant.
struct CalendarFields {
  int hour = 0;
  int day_of_week = 0;  // Monday = 0
  int week_of_month = 1;
  int month = 1;
};
CalendarFields calendar_fields(std::int64_t seconds);

// Calendar covariates that generate_time_covariates would append, in order.
std::vector<std::string> time_covariate_names(Granularity granularity,
                                              std::span<const FeatureSpec> existing);
RawSeries generate_time_covariates(const RawSeries& series);

struct NormalizedSeries {
  RawSeries series;
  MinMaxScaler scaler;
};
NormalizedSeries normalize_target(const RawSeries& series);

std::vector<WindowInstance> frame_windows(const RawSeries& series, std::size_t window_len,
                                          std::size_t horizons);

struct TrainTestSplit {
  std::vector<WindowInstance> train;
  std::vector<WindowInstance> test;
};
TrainTestSplit split_train_test(std::vector<WindowInstance> windows, double ratio = 0.8);

std::size_t train_window_count(std::size_t n_windows, double ratio);

std::vector<RawSeries> sample_series(std::span<const RawSeries> all, std::size_t n,
                                     std::uint64_t seed);

AblationPool build_pool(std::span<const WindowInstance> train);

// (1/T) sum of feature j over the first `train_rows` rows.
double global_mean(const Matrix& values, std::size_t train_rows, std::size_t feature);

struct SyntheticConfig {
  std::size_t n_series = 1;
  std::size_t length = 500;
  std::size_t features = 4;  // target, driver, then distractors
  std::size_t driver_lag = 3;
  double driver_coef = 1.0;
  double noise_std = 0.05;
  double trend = 0.0;
  double period = 24.0;
  Granularity granularity = Granularity::kHourly;
  std::int64_t start = 1388534400;  // 2014-01-01T00:00Z
};

// Feature 0 is the target: target(t) = driver_coef * driver(t - driver_lag) + noise.
// Feature 1 is the driver (sinusoid + AR(1)); remaining features are
// independent sinusoid + noise distractors.
std::vector<RawSeries> make_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Full pipeline: target min-max per series, non-target standardization on
// training rows, framing, per-series chronological split, pool and global means.
FramedDataset frame_dataset(std::span<const RawSeries> series, std::size_t window_len,
                            std::size_t horizons, double split_ratio = 0.8);

}  // namespace tsxfidel::dataset
