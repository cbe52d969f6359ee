#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/error.hpp"

namespace tsxfidel::dataset {
namespace {

std::string normalized_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

}  // namespace

std::int64_t granularity_seconds(Granularity g) {
  return g == Granularity::kHourly ? 3600 : 86400;
}

void validate_schema(std::span<const FeatureSpec> schema) {
  std::set<std::string> names;
  std::size_t targets = 0;
  for (const auto& f : schema) {
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate feature name '" + f.name + "'");
    }
    if (f.is_target) ++targets;
  }
  if (targets != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "schema must mark exactly one target feature, found " + std::to_string(targets));
  }
}

std::size_t RawSeries::target_index() const {
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j].is_target) return j;
  }
  throw Error(ErrorCode::kInvalidArgument, "series '" + series_id + "' has no target feature");
}

MinMaxScaler::MinMaxScaler(double min, double max) : min_(min), max_(max) {
  if (!(max > min)) {
    throw Error(ErrorCode::kConstantTarget, "scaler requires max > min");
  }
}

AblationPool::AblationPool(std::vector<std::vector<double>> values) : values_(std::move(values)) {
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (values_[j].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ablation pool for feature " + std::to_string(j) + " is empty");
    }
  }
}

double AblationPool::draw(std::size_t feature, Rng& rng) const {
  const auto& v = values_[feature];
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  return v[pick(rng)];
}

double AblationPool::mean(std::size_t feature) const {
  const auto& v = values_.at(feature);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

CalendarFields calendar_fields(std::int64_t seconds) {
  using namespace std::chrono;
  const std::int64_t day_index =
      seconds >= 0 ? seconds / 86400 : -((-seconds + 86399) / 86400);
  const sys_days day{days{day_index}};
  const year_month_day ymd{day};
  const weekday wd{day};
  CalendarFields f;
  f.hour = static_cast<int>((seconds - day_index * 86400) / 3600);
  f.day_of_week = static_cast<int>((wd.c_encoding() + 6) % 7);
  const unsigned dom = static_cast<unsigned>(ymd.day());
  f.week_of_month = static_cast<int>((dom + 6) / 7);
  f.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  return f;
}

std::vector<std::string> time_covariate_names(Granularity granularity,
                                              std::span<const FeatureSpec> existing) {
  std::vector<std::string> candidates;
  if (granularity == Granularity::kHourly) {
    candidates = {"hour_of_day", "day_of_week", "week_of_month", "month"};
  } else {
    candidates = {"day_of_week", "week_of_month", "month"};
  }
  std::set<std::string> present;
  for (const auto& f : existing) present.insert(normalized_name(f.name));
  std::vector<std::string> added;
  for (auto& c : candidates) {
    // Daily data (e.g. retail sales) usually carries day-of-week as a raw
    // column; only generate it when absent.
    if (!present.contains(normalized_name(c))) added.push_back(std::move(c));
  }
  return added;
}

RawSeries generate_time_covariates(const RawSeries& series) {
  enum class Field { kHour, kDayOfWeek, kWeekOfMonth, kMonth };
  struct Candidate {
    std::string name;
    Field field;
  };
  std::vector<Candidate> added;
  for (auto& name : time_covariate_names(series.granularity, series.features)) {
    Field f = Field::kMonth;
    if (name == "hour_of_day") f = Field::kHour;
    if (name == "day_of_week") f = Field::kDayOfWeek;
    if (name == "week_of_month") f = Field::kWeekOfMonth;
    added.push_back({std::move(name), f});
  }

  RawSeries out;
  out.series_id = series.series_id;
  out.timestamps = series.timestamps;
  out.granularity = series.granularity;
  out.features = series.features;
  const std::size_t j0 = series.feature_count();
  out.values = Matrix(series.length(), j0 + added.size());
  for (const auto& c : added) {
    out.features.push_back({c.name, FeatureKind::kNumeric, false, true});
  }
  for (std::size_t t = 0; t < series.length(); ++t) {
    for (std::size_t j = 0; j < j0; ++j) out.values(t, j) = series.values(t, j);
    const auto cal = calendar_fields(series.timestamps[t]);
    for (std::size_t k = 0; k < added.size(); ++k) {
      int v = 0;
      switch (added[k].field) {
        case Field::kHour: v = cal.hour; break;
        case Field::kDayOfWeek: v = cal.day_of_week; break;
        case Field::kWeekOfMonth: v = cal.week_of_month; break;
        case Field::kMonth: v = cal.month; break;
      }
      out.values(t, j0 + k) = static_cast<double>(v);
    }
  }
  return out;
}

NormalizedSeries normalize_target(const RawSeries& series) {
  const std::size_t target = series.target_index();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t t = 0; t < series.length(); ++t) {
    lo = std::min(lo, series.values(t, target));
    hi = std::max(hi, series.values(t, target));
  }
  if (!(hi > lo)) {
    throw Error(ErrorCode::kConstantTarget,
                "target of series '" + series.series_id + "' is constant");
  }
  NormalizedSeries out{series, MinMaxScaler(lo, hi)};
  for (std::size_t t = 0; t < series.length(); ++t) {
    out.series.values(t, target) = out.scaler.transform(series.values(t, target));
  }
  return out;
}

std::vector<WindowInstance> frame_windows(const RawSeries& series, std::size_t window_len,
                                          std::size_t horizons) {
  if (window_len == 0 || horizons == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window length and horizon count must be positive");
  }
  const std::size_t T = series.length();
  if (T < window_len + horizons) {
    throw Error(ErrorCode::kSeriesTooShort,
                "series '" + series.series_id + "' has " + std::to_string(T) +
                    " steps, needs at least " + std::to_string(window_len + horizons));
  }
  const std::size_t J = series.feature_count();
  const std::size_t target = series.target_index();
  const std::size_t n = T - window_len - horizons + 1;
  std::vector<WindowInstance> windows;
  windows.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    WindowInstance w;
    w.x = Matrix(J, window_len);
    for (std::size_t l = 0; l < window_len; ++l) {
      for (std::size_t j = 0; j < J; ++j) w.x(j, l) = series.values(k + l, j);
    }
    w.y.resize(horizons);
    for (std::size_t h = 0; h < horizons; ++h) {
      w.y[h] = series.values(k + window_len + h, target);
    }
    w.t_anchor = k + window_len - 1;
    w.series_id = series.series_id;
    windows.push_back(std::move(w));
  }
  return windows;
}

std::size_t train_window_count(std::size_t n_windows, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n_windows) + 1e-9));
}

TrainTestSplit split_train_test(std::vector<WindowInstance> windows, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratio must lie in (0, 1)");
  }
  const std::size_t n_train = train_window_count(windows.size(), ratio);
  if (n_train == 0 || n_train == windows.size()) {
    throw Error(ErrorCode::kEmptySplit, std::to_string(windows.size()) + " windows at ratio " +
                                            std::to_string(ratio) + " leave one side empty");
  }
  TrainTestSplit split;
  split.test.assign(std::make_move_iterator(windows.begin() + static_cast<std::ptrdiff_t>(n_train)),
                    std::make_move_iterator(windows.end()));
  windows.resize(n_train);
  split.train = std::move(windows);
  return split;
}

std::vector<RawSeries> sample_series(std::span<const RawSeries> all, std::size_t n,
                                     std::uint64_t seed) {
  if (n > all.size()) {
    throw Error(ErrorCode::kNotEnoughSeries, "requested " + std::to_string(n) + " series, only " +
                                                 std::to_string(all.size()) + " available");
  }
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(stream_key({seed, hash_string("sample_series")}));
  // Partial Fisher-Yates with an explicit index draw: std::shuffle's
  // algorithm is implementation-defined.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<RawSeries> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

AblationPool build_pool(std::span<const WindowInstance> train) {
  if (train.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, "cannot build an ablation pool without windows");
  }
  const std::size_t J = train.front().x.rows();
  std::vector<std::vector<double>> values(J);
  for (auto& v : values) v.reserve(train.size() * train.front().x.cols());
  for (const auto& w : train) {
    for (std::size_t j = 0; j < J; ++j) {
      const auto row = w.x.row(j);
      values[j].insert(values[j].end(), row.begin(), row.end());
    }
  }
  return AblationPool(std::move(values));
}

double global_mean(const Matrix& values, std::size_t train_rows, std::size_t feature) {
  if (train_rows == 0 || train_rows > values.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "training row count out of range");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < train_rows; ++t) sum += values(t, feature);
  return sum / static_cast<double>(train_rows);
}

std::vector<RawSeries> make_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.features < 2) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic data needs a target and a driver");
  }
  if (config.length == 0 || config.n_series == 0 || !(config.period > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic length, series count and period must be positive");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const std::size_t T = config.length;
  const std::size_t lag = config.driver_lag;
  const std::int64_t step = granularity_seconds(config.granularity);

  std::vector<RawSeries> out;
  for (std::size_t s = 0; s < config.n_series; ++s) {
    Rng rng = make_rng(stream_key({seed, hash_string("synthetic"), s}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);

    RawSeries series;
    series.series_id = "s" + std::to_string(s);
    series.granularity = config.granularity;
    series.features.push_back({"target", FeatureKind::kNumeric, true, false});
    series.features.push_back({"driver", FeatureKind::kNumeric, false, false});
    for (std::size_t j = 2; j < config.features; ++j) {
      series.features.push_back({"x" + std::to_string(j), FeatureKind::kNumeric, false, false});
    }
    series.values = Matrix(T, config.features);
    for (std::size_t t = 0; t < T; ++t) {
      series.timestamps.push_back(config.start + static_cast<std::int64_t>(t) * step);
    }

    // Driver history starts `lag` steps before the first row.
    const double phase = phase_dist(rng);
    std::vector<double> driver(T + lag);
    double ar = 0.0;
    for (std::size_t i = 0; i < T + lag; ++i) {
      const double t = static_cast<double>(i) - static_cast<double>(lag);
      ar = 0.8 * ar + 0.3 * normal(rng);
      driver[i] = 0.5 * std::sin(kTwoPi * t / config.period + phase) + ar + config.trend * t;
    }
    for (std::size_t t = 0; t < T; ++t) {
      series.values(t, 1) = driver[t + lag];
      const double noise = config.noise_std > 0.0 ? config.noise_std * normal(rng) : 0.0;
      series.values(t, 0) = config.driver_coef * driver[t] + noise;
    }
    for (std::size_t j = 2; j < config.features; ++j) {
      const double ph = phase_dist(rng);
      const double period = config.period * (0.5 + 0.25 * static_cast<double>(j));
      for (std::size_t t = 0; t < T; ++t) {
        const double tt = static_cast<double>(t);
        const double noise = config.noise_std > 0.0 ? config.noise_std * normal(rng) : 0.0;
        series.values(t, j) = std::sin(kTwoPi * tt / period + ph) + config.trend * tt + noise;
      }
    }
    out.push_back(std::move(series));
  }
  return out;
}

FramedDataset frame_dataset(std::span<const RawSeries> series, std::size_t window_len,
                            std::size_t horizons, double split_ratio) {
  if (series.empty()) {
    throw Error(ErrorCode::kEmptyTrainingSet, "no series to frame");
  }
  FramedDataset ds;
  ds.window_len = window_len;
  ds.horizons = horizons;
  ds.feature_specs = series.front().features;
  const std::size_t J = ds.feature_specs.size();

  std::vector<NormalizedSeries> normalized;
  std::vector<std::size_t> train_rows;
  for (const auto& s : series) {
    if (s.features != ds.feature_specs) {
      throw Error(ErrorCode::kShapeMismatch,
                  "series '" + s.series_id + "' has a different feature layout");
    }
    if (s.length() < window_len + horizons) {
      throw Error(ErrorCode::kSeriesTooShort,
                  "series '" + s.series_id + "' has " + std::to_string(s.length()) +
                      " steps, needs at least " + std::to_string(window_len + horizons));
    }
    const std::size_t n_windows = s.length() - window_len - horizons + 1;
    const std::size_t n_train = train_window_count(n_windows, split_ratio);
    if (n_train == 0 || n_train == n_windows) {
      throw Error(ErrorCode::kEmptySplit, "series '" + s.series_id + "' yields " +
                                              std::to_string(n_windows) +
                                              " windows, too few to split");
    }
    train_rows.push_back(n_train - 1 + window_len);
    normalized.push_back(normalize_target(s));
    ds.scalers[s.series_id] = normalized.back().scaler;
  }

  const std::size_t target = series.front().target_index();
  ds.standardizer.mean.assign(J, 0.0);
  ds.standardizer.scale.assign(J, 1.0);
  ds.standardizer.active.assign(J, true);
  ds.standardizer.active[target] = false;
  for (std::size_t j = 0; j < J; ++j) {
    if (!ds.standardizer.active[j]) continue;
    double sum = 0.0;
    double n = 0.0;
    for (std::size_t s = 0; s < normalized.size(); ++s) {
      for (std::size_t t = 0; t < train_rows[s]; ++t) sum += normalized[s].series.values(t, j);
      n += static_cast<double>(train_rows[s]);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t s = 0; s < normalized.size(); ++s) {
      for (std::size_t t = 0; t < train_rows[s]; ++t) {
        const double d = normalized[s].series.values(t, j) - mean;
        ss += d * d;
      }
    }
    const double var = ss / n;
    ds.standardizer.mean[j] = mean;
    ds.standardizer.scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  for (std::size_t s = 0; s < normalized.size(); ++s) {
    RawSeries& rs = normalized[s].series;
    for (std::size_t t = 0; t < rs.length(); ++t) {
      for (std::size_t j = 0; j < J; ++j) {
        if (ds.standardizer.active[j]) {
          rs.values(t, j) = (rs.values(t, j) - ds.standardizer.mean[j]) / ds.standardizer.scale[j];
        }
      }
    }
    std::vector<double> means(J);
    for (std::size_t j = 0; j < J; ++j) means[j] = global_mean(rs.values, train_rows[s], j);
    ds.global_means[rs.series_id] = std::move(means);

    auto split = split_train_test(frame_windows(rs, window_len, horizons), split_ratio);
    std::move(split.train.begin(), split.train.end(), std::back_inserter(ds.train));
    std::move(split.test.begin(), split.test.end(), std::back_inserter(ds.test));
  }
  ds.pool = build_pool(ds.train);
  return ds;
}

}  // namespace tsxfidel::dataset
