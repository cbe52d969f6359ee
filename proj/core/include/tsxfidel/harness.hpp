#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/metrics.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::harness {

std::string_view tool_version();

struct DataSource {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  dataset::SyntheticConfig synthetic;
  std::filesystem::path csv_path;
  std::vector<dataset::FeatureSpec> schema;
  dataset::Granularity granularity = dataset::Granularity::kHourly;
  dataset::CsvOptions csv;
  bool time_covariates = true;
};

enum class ModelKind { kGbr, kTdnn };
std::string_view to_string(ModelKind k);

struct ExperimentConfig {
  std::string name = "experiment";
  DataSource data;
  std::size_t window_len = 24;
  std::size_t horizons = 12;
  std::size_t n_series = 0;  // 0 keeps every series
  double split_ratio = 0.8;
  std::vector<ModelKind> models;
  models::GbrParams gbr;
  models::TrainConfig tdnn;
  std::vector<explainers::ExplainerKind> explainers;
  explainers::KernelShapConfig shap;
  metrics::MetricConfig metrics;
  double confidence = 0.95;
  std::size_t max_windows = 0;  // 0 evaluates every test window
  std::size_t importance_windows = 2;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "tsxfidel-out";

  // Dotted paths of every setting that was filled from a default.
  std::vector<std::string> defaulted;

  std::size_t feature_count() const;
  // Resolved configuration as canonical JSON text; valid input to validate_config.
  std::string echo() const;
};

// All validation problems, collected before failing.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

// Relative CSV paths resolve against `base_dir`.
ExperimentConfig validate_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::size_t jobs = 1;
};

struct ModelPerformance {
  std::string model;
  double nrmse = 0.0;
  double nd = 0.0;
};

struct ScoreRow {
  std::string model;
  std::string explainer;
  metrics::FidelityScore score;
  bool best = false;  // best explainer for this (model, metric, direction)
};

struct SkippedRecord {
  std::string model;
  std::string explainer;
  metrics::SkippedWindow window;
};

struct ImportanceRecord {
  std::string model;
  std::string explainer;
  std::string series_id;
  std::size_t t_anchor = 0;
  std::size_t horizon = 0;  // one-based
  std::size_t feature = 0;
  std::size_t lag = 0;
  std::string feature_name;
  double phi = 0.0;
};

struct FidelityReport {
  std::string tool_version;
  std::string config_echo;
  std::vector<std::string> defaulted;
  std::string dataset_name;
  std::vector<std::string> feature_names;
  std::size_t series_count = 0;
  std::size_t window_len = 0;
  std::size_t horizons = 0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  std::size_t evaluated_windows = 0;
  std::vector<ModelPerformance> performance;
  std::vector<ScoreRow> scores;
  std::vector<SkippedRecord> skipped;
  std::vector<ImportanceRecord> importance;
};

// Evenly spaced subset of at most `max_windows` windows (all when 0).
std::vector<dataset::WindowInstance> select_windows(std::span<const dataset::WindowInstance> windows,
                                                    std::size_t max_windows);

FidelityReport run(const ExperimentConfig& config, const RunOptions& options = {});

enum class Format { kJson, kCsv };

std::string report_json(const FidelityReport& report);
std::string scores_csv(const FidelityReport& report);
std::string importance_csv(const FidelityReport& report);
std::string model_perf_csv(const FidelityReport& report);

// Writes report.json and/or scores.csv, importance.csv, model_perf.csv.
std::vector<std::filesystem::path> emit(const FidelityReport& report,
                                        const std::filesystem::path& out_dir,
                                        std::span<const Format> formats = {});

}  // namespace tsxfidel::harness
