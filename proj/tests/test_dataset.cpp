#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsxfidel/dataset.hpp"
#include "tsxfidel/error.hpp"

namespace tsxfidel {
namespace {

using dataset::FeatureKind;
using dataset::FeatureSpec;
using dataset::Granularity;
using dataset::RawSeries;

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tsxfidel::Error thrown";
  return ErrorCode::kInvalidArgument;
}

std::vector<FeatureSpec> three_features() {
  return {{"load", FeatureKind::kNumeric, true, false},
          {"temp", FeatureKind::kNumeric, false, false},
          {"store", FeatureKind::kCategoricalEncoded, false, false}};
}

RawSeries ramp_series(std::size_t T, std::size_t J) {
  RawSeries s;
  s.series_id = "a";
  s.granularity = Granularity::kHourly;
  s.values = Matrix(T, J);
  for (std::size_t j = 0; j < J; ++j) {
    s.features.push_back({"f" + std::to_string(j), FeatureKind::kNumeric, j == 0, false});
  }
  for (std::size_t t = 0; t < T; ++t) {
    s.timestamps.push_back(1388534400 + static_cast<std::int64_t>(t) * 3600);
    for (std::size_t j = 0; j < J; ++j) s.values(t, j) = static_cast<double>(t * 10 + j);
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV loading

TEST(LoadCsv, FourRowsOneSeries) {
  const auto dir = testing::temp_dir("csv-basic");
  testing::write_text(dir / "d.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T00:00:00,h1,1.5,10,b\n"
                      "2014-01-01T01:00:00,h1,2.5,11,a\n"
                      "2014-01-01T02:00:00,h1,3.5,12,b\n"
                      "2014-01-01T03:00:00,h1,4.5,13,c\n");
  const auto series = dataset::load_csv(dir / "d.csv", three_features(), Granularity::kHourly);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0].length(), 4u);
  EXPECT_EQ(series[0].feature_count(), 3u);
  EXPECT_EQ(series[0].series_id, "h1");
  EXPECT_DOUBLE_EQ(series[0].values(2, 0), 3.5);
  EXPECT_DOUBLE_EQ(series[0].values(3, 1), 13.0);
  // Categories are encoded by sorted distinct value: a=0, b=1, c=2.
  EXPECT_DOUBLE_EQ(series[0].values(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(series[0].values(1, 2), 0.0);
  EXPECT_DOUBLE_EQ(series[0].values(3, 2), 2.0);
  EXPECT_EQ(series[0].timestamps[1] - series[0].timestamps[0], 3600);
}

TEST(LoadCsv, DuplicatedTimestampIsNonMonotonic) {
  const auto dir = testing::temp_dir("csv-dup");
  testing::write_text(dir / "d.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T00:00:00,h1,1,10,a\n"
                      "2014-01-01T00:00:00,h1,2,11,a\n"
                      "2014-01-01T01:00:00,h1,3,12,a\n");
  EXPECT_EQ(error_code_of([&] {
              dataset::load_csv(dir / "d.csv", three_features(), Granularity::kHourly);
            }),
            ErrorCode::kNonMonotonicTimestamps);
}

TEST(LoadCsv, InterleavedSeriesArePartitionedAndOrdered) {
  const auto dir = testing::temp_dir("csv-interleaved");
  testing::write_text(dir / "d.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T02:00:00,b,23,0,x\n"
                      "2014-01-01T00:00:00,a,10,0,x\n"
                      "2014-01-01T00:00:00,b,21,0,x\n"
                      "2014-01-01T02:00:00,a,12,0,x\n"
                      "2014-01-01T01:00:00,b,22,0,x\n"
                      "2014-01-01T01:00:00,a,11,0,x\n");
  const auto series = dataset::load_csv(dir / "d.csv", three_features(), Granularity::kHourly);
  ASSERT_EQ(series.size(), 2u);
  std::map<std::string, std::vector<double>> loads;
  for (const auto& s : series) {
    EXPECT_TRUE(std::is_sorted(s.timestamps.begin(), s.timestamps.end()));
    for (std::size_t t = 0; t < s.length(); ++t) loads[s.series_id].push_back(s.values(t, 0));
  }
  EXPECT_EQ(loads["a"], (std::vector<double>{10, 11, 12}));
  EXPECT_EQ(loads["b"], (std::vector<double>{21, 22, 23}));
}

TEST(LoadCsv, MissingColumnIsNamed) {
  const auto dir = testing::temp_dir("csv-missing-col");
  testing::write_text(dir / "d.csv", "timestamp,series_id,load,store\n2014-01-01,a,1,x\n");
  try {
    dataset::load_csv(dir / "d.csv", three_features(), Granularity::kDaily);
    FAIL() << "expected MissingColumn";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingColumn);
    EXPECT_NE(std::string(e.what()).find("temp"), std::string::npos);
  }
}

TEST(LoadCsv, UnparseableAndMissingCellsNameRowAndColumn) {
  const auto dir = testing::temp_dir("csv-bad-cell");
  testing::write_text(dir / "d.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T00:00,a,1,10,x\n"
                      "2014-01-01T01:00,a,abc,11,x\n");
  try {
    dataset::load_csv(dir / "d.csv", three_features(), Granularity::kHourly);
    FAIL() << "expected UnparseableCell";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnparseableCell);
    EXPECT_NE(std::string(e.what()).find("load"), std::string::npos);
  }
  testing::write_text(dir / "e.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T00:00,a,1,,x\n");
  EXPECT_EQ(error_code_of([&] {
              dataset::load_csv(dir / "e.csv", three_features(), Granularity::kHourly);
            }),
            ErrorCode::kUnparseableCell);
}

TEST(LoadCsv, GapIsIrregular) {
  const auto dir = testing::temp_dir("csv-gap");
  testing::write_text(dir / "d.csv",
                      "timestamp,series_id,load,temp,store\n"
                      "2014-01-01T00:00,a,1,10,x\n"
                      "2014-01-01T02:00,a,2,11,x\n");
  EXPECT_EQ(error_code_of([&] {
              dataset::load_csv(dir / "d.csv", three_features(), Granularity::kHourly);
            }),
            ErrorCode::kIrregularTimestamps);
}

TEST(LoadCsv, QuotedFieldsAndNoSeriesColumn) {
  const auto dir = testing::temp_dir("csv-quoted");
  testing::write_text(dir / "d.csv",
                      "timestamp,load,temp,store\n"
                      "2014-01-01,1,10,\"x, y\"\n"
                      "2014-01-02,2,11,\"z\"\n");
  const auto series = dataset::load_csv(dir / "d.csv", three_features(), Granularity::kDaily);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0].length(), 2u);
  EXPECT_DOUBLE_EQ(series[0].values(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(series[0].values(1, 2), 1.0);
}

TEST(ParseIso8601, Formats) {
  EXPECT_EQ(dataset::parse_iso8601("2014-01-01T00:00:00"), 1388534400);
  EXPECT_EQ(dataset::parse_iso8601("2014-01-01 01:00"), 1388534400 + 3600);
  EXPECT_EQ(dataset::parse_iso8601("2014-01-01T00:00:05Z"), 1388534405);
  EXPECT_EQ(dataset::parse_iso8601("2014-01-02"), 1388534400 + 86400);
  EXPECT_THROW(dataset::parse_iso8601("2014-13-01"), Error);
  EXPECT_THROW(dataset::parse_iso8601("yesterday"), Error);
}

TEST(Schema, ExactlyOneTargetAndUniqueNames) {
  std::vector<FeatureSpec> none = {{"a", FeatureKind::kNumeric, false, false}};
  EXPECT_THROW(dataset::validate_schema(none), Error);
  std::vector<FeatureSpec> dup = {{"a", FeatureKind::kNumeric, true, false},
                                  {"a", FeatureKind::kNumeric, false, false}};
  EXPECT_THROW(dataset::validate_schema(dup), Error);
  EXPECT_NO_THROW(dataset::validate_schema(three_features()));
}

// ---------------------------------------------------------------------------
// Calendar covariates

TEST(TimeCovariates, NewYear2014Hourly) {
  const auto f = dataset::calendar_fields(dataset::parse_iso8601("2014-01-01T00:00"));
  EXPECT_EQ(f.hour, 0);
  EXPECT_EQ(f.day_of_week, 2);  // Wednesday
  EXPECT_EQ(f.week_of_month, 1);
  EXPECT_EQ(f.month, 1);
}

TEST(TimeCovariates, HourTwentyThree) {
  EXPECT_EQ(dataset::calendar_fields(dataset::parse_iso8601("2014-03-09T23:00")).hour, 23);
}

TEST(TimeCovariates, CalendarTable) {
  struct Row {
    const char* ts;
    int dow, wom, month;
  };
  // Checked against a printed calendar.
  const Row rows[] = {{"2014-01-06", 0, 1, 1},  {"2014-01-07", 1, 1, 1},
                      {"2014-01-08", 2, 2, 1},  {"2014-02-28", 4, 4, 2},
                      {"2014-03-29", 5, 5, 3},  {"2014-08-31", 6, 5, 8},
                      {"2015-12-25", 4, 4, 12}, {"2016-02-29", 0, 5, 2}};
  for (const auto& r : rows) {
    const auto f = dataset::calendar_fields(dataset::parse_iso8601(r.ts));
    EXPECT_EQ(f.day_of_week, r.dow) << r.ts;
    EXPECT_EQ(f.week_of_month, r.wom) << r.ts;
    EXPECT_EQ(f.month, r.month) << r.ts;
  }
}

TEST(TimeCovariates, HourlyGainsFour) {
  auto s = ramp_series(5, 2);
  const auto out = dataset::generate_time_covariates(s);
  ASSERT_EQ(out.feature_count(), 6u);
  EXPECT_EQ(out.features[2].name, "hour_of_day");
  EXPECT_EQ(out.features[5].name, "month");
  for (std::size_t j = 2; j < 6; ++j) EXPECT_TRUE(out.features[j].is_covariate);
  EXPECT_DOUBLE_EQ(out.values(3, 2), 3.0);
  EXPECT_DOUBLE_EQ(out.values(3, 3), 2.0);
  EXPECT_DOUBLE_EQ(out.values(3, 0), s.values(3, 0));
}

TEST(TimeCovariates, DailyWithRawDayOfWeekGainsTwo) {
  auto s = ramp_series(5, 2);
  s.granularity = Granularity::kDaily;
  s.features[1].name = "DayOfWeek";
  for (std::size_t t = 0; t < 5; ++t) s.timestamps[t] = 1388534400 + t * 86400;
  const auto out = dataset::generate_time_covariates(s);
  ASSERT_EQ(out.feature_count(), 4u);
  EXPECT_EQ(out.features[2].name, "week_of_month");
  EXPECT_EQ(out.features[3].name, "month");
}

TEST(TimeCovariates, DailyWithoutDayOfWeekGeneratesIt) {
  auto s = ramp_series(5, 2);
  s.granularity = Granularity::kDaily;
  EXPECT_EQ(dataset::time_covariate_names(Granularity::kDaily, s.features).size(), 3u);
}

// ---------------------------------------------------------------------------
// Normalization

TEST(NormalizeTarget, LinearMap) {
  auto s = ramp_series(3, 1);
  s.values(0, 0) = 0;
  s.values(1, 0) = 5;
  s.values(2, 0) = 10;
  const auto n = dataset::normalize_target(s);
  EXPECT_DOUBLE_EQ(n.series.values(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(n.series.values(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(n.series.values(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(n.scaler.min(), 0.0);
  EXPECT_DOUBLE_EQ(n.scaler.max(), 10.0);
}

TEST(NormalizeTarget, UnitRangeUnchanged) {
  auto s = ramp_series(3, 1);
  s.values(0, 0) = 0;
  s.values(1, 0) = 0.25;
  s.values(2, 0) = 1;
  const auto n = dataset::normalize_target(s);
  EXPECT_EQ(n.series.values, s.values);
  EXPECT_DOUBLE_EQ(n.scaler.min(), 0.0);
  EXPECT_DOUBLE_EQ(n.scaler.max(), 1.0);
}

TEST(NormalizeTarget, ConstantTarget) {
  auto s = ramp_series(3, 1);
  for (std::size_t t = 0; t < 3; ++t) s.values(t, 0) = 3.0;
  EXPECT_EQ(error_code_of([&] { dataset::normalize_target(s); }), ErrorCode::kConstantTarget);
}

TEST(NormalizeTarget, RoundTrip) {
  const dataset::MinMaxScaler sc(-3.7, 12.25);
  for (int i = 0; i <= 1000; ++i) {
    const double v = -3.7 + (12.25 + 3.7) * i / 1000.0;
    EXPECT_NEAR(sc.inverse(sc.transform(v)), v, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Framing and splitting

TEST(FrameWindows, Count) {
  EXPECT_EQ(dataset::frame_windows(ramp_series(10, 2), 3, 2).size(), 6u);
}

TEST(FrameWindows, TooShort) {
  EXPECT_EQ(error_code_of([&] { dataset::frame_windows(ramp_series(5, 2), 3, 3); }),
            ErrorCode::kSeriesTooShort);
}

TEST(FrameWindows, PaperScaleIndexArithmetic) {
  const auto s = ramp_series(2000, 2);
  const auto w = dataset::frame_windows(s, 168, 12);
  ASSERT_EQ(w.size(), 1821u);
  ASSERT_EQ(w[0].y.size(), 12u);
  for (std::size_t h = 0; h < 12; ++h) EXPECT_DOUBLE_EQ(w[0].y[h], s.values(168 + h, 0));
  EXPECT_EQ(w[0].t_anchor, 167u);
}

TEST(FrameWindows, AlignmentProperty) {
  for (std::size_t T : {7u, 12u, 31u}) {
    for (std::size_t L : {1u, 2u, 5u}) {
      for (std::size_t t0 : {1u, 3u}) {
        if (T < L + t0) continue;
        const auto s = ramp_series(T, 3);
        const auto w = dataset::frame_windows(s, L, t0);
        ASSERT_EQ(w.size(), T - L - t0 + 1);
        for (std::size_t k = 0; k < w.size(); ++k) {
          ASSERT_EQ(w[k].x.rows(), 3u);
          ASSERT_EQ(w[k].x.cols(), L);
          for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_DOUBLE_EQ(w[k].x(j, L - 1), s.values(k + L - 1, j));
            EXPECT_DOUBLE_EQ(w[k].x(j, 0), s.values(k, j));
          }
        }
      }
    }
  }
}

TEST(SplitTrainTest, Slicing) {
  auto w = dataset::frame_windows(ramp_series(13, 1), 2, 2);  // 10 windows
  auto split = dataset::split_train_test(w, 0.8);
  EXPECT_EQ(split.train.size(), 8u);
  ASSERT_EQ(split.test.size(), 2u);
  EXPECT_EQ(split.test[0].t_anchor, w[8].t_anchor);
  EXPECT_EQ(split.test[1].t_anchor, w[9].t_anchor);

  auto five = dataset::frame_windows(ramp_series(8, 1), 2, 2);
  auto s5 = dataset::split_train_test(five, 0.8);
  EXPECT_EQ(s5.train.size(), 4u);
  EXPECT_EQ(s5.test.size(), 1u);

  auto one = dataset::frame_windows(ramp_series(4, 1), 2, 2);
  EXPECT_EQ(error_code_of([&] { dataset::split_train_test(one, 0.8); }), ErrorCode::kEmptySplit);
}

TEST(SplitTrainTest, DisjointAndChronological) {
  const auto w = dataset::frame_windows(ramp_series(57, 2), 4, 3);
  const auto split = dataset::split_train_test(w, 0.8);
  std::size_t last_train = 0;
  for (const auto& t : split.train) last_train = std::max(last_train, t.t_anchor);
  for (const auto& t : split.test) EXPECT_GT(t.t_anchor, last_train);
  EXPECT_EQ(split.train.size() + split.test.size(), w.size());
}

TEST(SampleSeries, DeterministicDistinct) {
  std::vector<RawSeries> all;
  for (int i = 0; i < 370; ++i) {
    auto s = ramp_series(3, 1);
    s.series_id = "h" + std::to_string(i);
    all.push_back(s);
  }
  const auto a = dataset::sample_series(all, 100, 7);
  const auto b = dataset::sample_series(all, 100, 7);
  ASSERT_EQ(a.size(), 100u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ids.insert(a[i].series_id);
    EXPECT_EQ(a[i].series_id, b[i].series_id);
  }
  EXPECT_EQ(ids.size(), 100u);
  const auto c = dataset::sample_series(all, 100, 8);
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) differs |= c[i].series_id != a[i].series_id;
  EXPECT_TRUE(differs);

  const auto full = dataset::sample_series(all, 370, 7);
  std::set<std::string> full_ids;
  for (const auto& s : full) full_ids.insert(s.series_id);
  EXPECT_EQ(full_ids.size(), 370u);
  EXPECT_EQ(error_code_of([&] { dataset::sample_series(all, 371, 7); }),
            ErrorCode::kNotEnoughSeries);
}

// ---------------------------------------------------------------------------
// Ablation pool and global means

TEST(AblationPool, Enumeration) {
  std::vector<dataset::WindowInstance> train(2);
  train[0].x = Matrix(1, 2, {1, 2});
  train[1].x = Matrix(1, 2, {2, 3});
  const auto pool = dataset::build_pool(train);
  auto v = std::vector<double>(pool.values(0).begin(), pool.values(0).end());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<double>{1, 2, 2, 3}));
}

TEST(AblationPool, EmpiricalFrequency) {
  const dataset::AblationPool pool({{1, 2, 2, 3}});
  Rng rng = make_rng(11);
  int twos = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) twos += pool.draw(0, rng) == 2.0;
  EXPECT_NEAR(static_cast<double>(twos) / n, 0.5, 0.02);
}

TEST(AblationPool, SingleWindowDrawsStayInWindow) {
  std::vector<dataset::WindowInstance> train(1);
  train[0].x = Matrix(2, 3, {1, 2, 3, 7, 8, 9});
  const auto pool = dataset::build_pool(train);
  Rng rng = make_rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = pool.draw(0, rng);
    const double b = pool.draw(1, rng);
    EXPECT_TRUE(a == 1 || a == 2 || a == 3);
    EXPECT_TRUE(b == 7 || b == 8 || b == 9);
  }
}

TEST(AblationPool, CardinalityProperty) {
  const auto fx = testing::synthetic_fixture({.n_series = 2, .length = 80, .features = 3}, 5, 2, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(fx.data.pool.values(j).size(), fx.data.train.size() * 5);
  }
}

TEST(GlobalMean, SeriesMean) {
  EXPECT_DOUBLE_EQ(dataset::global_mean(Matrix(3, 1, {1, 2, 3}), 3, 0), 2.0);
  // Whole-series window: global mean equals the local mean.
  const Matrix v(4, 1, {0.1, 0.2, 0.7, 1.0});
  double local = 0.0;
  for (std::size_t t = 0; t < 4; ++t) local += v(t, 0);
  EXPECT_DOUBLE_EQ(dataset::global_mean(v, 4, 0), local / 4);
}

TEST(FrameDataset, GlobalMeansComputedOnceOverTrainingRows) {
  const auto fx = testing::synthetic_fixture({.n_series = 2, .length = 60, .features = 3}, 4, 2, 5);
  for (const auto& [id, means] : fx.data.global_means) {
    // Recompute from the training windows: rows [0, n_train - 1 + L).
    std::vector<const dataset::WindowInstance*> train;
    for (const auto& w : fx.data.train) {
      if (w.series_id == id) train.push_back(&w);
    }
    ASSERT_FALSE(train.empty());
    for (std::size_t j = 0; j < 3; ++j) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t l = 0; l < 4; ++l) {
        sum += train.front()->x(j, l);
        ++n;
      }
      for (std::size_t k = 1; k < train.size(); ++k) {
        sum += train[k]->x(j, 3);
        ++n;
      }
      EXPECT_NEAR(means[j], sum / static_cast<double>(n), 1e-12);
    }
  }
}

TEST(FrameDataset, TargetInUnitRangeAndStandardizedFeatures) {
  const auto fx = testing::synthetic_fixture({.n_series = 1, .length = 300, .features = 4}, 6, 3, 9);
  for (const auto& w : fx.data.train) {
    for (std::size_t l = 0; l < 6; ++l) {
      EXPECT_GE(w.x(0, l), 0.0);
      EXPECT_LE(w.x(0, l), 1.0);
    }
  }
  EXPECT_FALSE(fx.data.standardizer.active[0]);
  EXPECT_TRUE(fx.data.standardizer.active[1]);
  EXPECT_EQ(fx.data.scalers.size(), 1u);
}

// ---------------------------------------------------------------------------
// Synthetic generator

TEST(MakeSynthetic, NoiselessTargetIsLaggedDriver) {
  dataset::SyntheticConfig cfg{.n_series = 1, .length = 200, .features = 3, .driver_lag = 4,
                               .driver_coef = 1.0, .noise_std = 0.0};
  const auto s = dataset::make_synthetic(cfg, 3)[0];
  for (std::size_t t = 4; t < 200; ++t) EXPECT_DOUBLE_EQ(s.values(t, 0), s.values(t - 4, 1));
}

TEST(MakeSynthetic, DeterministicAndShaped) {
  dataset::SyntheticConfig cfg{.n_series = 2, .length = 500, .features = 4};
  const auto a = dataset::make_synthetic(cfg, 42);
  const auto b = dataset::make_synthetic(cfg, 42);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].length(), 500u);
  EXPECT_EQ(a[0].feature_count(), 4u);
  EXPECT_EQ(a[0].values, b[0].values);
  EXPECT_EQ(a[1].values, b[1].values);
  EXPECT_NE(a[0].values, a[1].values);
  EXPECT_NE(a[0].values, dataset::make_synthetic(cfg, 43)[0].values);
}

}  // namespace
}  // namespace tsxfidel
