#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <tuple>

#include <json.hpp>

#include "tsxfidel/error.hpp"
#include "tsxfidel/harness.hpp"

namespace tsxfidel::harness {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::size_t total_samples(const metrics::FidelityScore& s) {
  std::size_t n = 0;
  for (const auto& h : s.per_horizon) n += h.n_samples;
  return n;
}

bool all_converged(const metrics::FidelityScore& s) {
  return std::all_of(s.per_horizon.begin(), s.per_horizon.end(),
                     [](const metrics::MCEstimate& e) { return e.converged; });
}

// Higher AOPCR is better for the positive direction, lower for the negative
// one; lower APT is better in both.
bool better(const metrics::FidelityScore& a, const metrics::FidelityScore& b) {
  if (a.metric == metrics::Metric::kAopcr && a.direction == explainers::Direction::kMostPositive) {
    return a.total > b.total;
  }
  return a.total < b.total;
}

void mark_best(std::vector<ScoreRow>& rows) {
  std::map<std::tuple<std::string, metrics::Metric, explainers::Direction>, const ScoreRow*> best;
  for (const auto& row : rows) {
    if (std::isnan(row.score.total)) continue;
    const auto key = std::make_tuple(row.model, row.score.metric, row.score.direction);
    auto it = best.find(key);
    if (it == best.end() || better(row.score, it->second->score)) best[key] = &row;
  }
  for (auto& row : rows) {
    const auto key = std::make_tuple(row.model, row.score.metric, row.score.direction);
    auto it = best.find(key);
    // Ties share the flag.
    row.best = it != best.end() && !better(it->second->score, row.score) &&
               !better(row.score, it->second->score);
  }
}

std::unique_ptr<models::ForecastModel> train(ModelKind kind, const ExperimentConfig& cfg,
                                             const dataset::FramedDataset& data) {
  if (kind == ModelKind::kGbr) {
    return std::make_unique<models::GbrModel>(models::fit_gbr(data.train, cfg.gbr));
  }
  models::TrainConfig tc = cfg.tdnn;
  tc.seed = stream_key({cfg.seed, hash_string("tdnn")});
  return std::make_unique<models::TdnnModel>(models::fit_tdnn(data.train, tc));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

ordered_json estimate_json(const metrics::MCEstimate& e, std::size_t horizon, std::size_t windows) {
  return {{"horizon", horizon},
          {"mean", e.mean},
          {"margin_of_error", e.margin_of_error},
          {"samples", e.n_samples},
          {"converged", e.converged},
          {"windows", windows}};
}

}  // namespace

std::vector<dataset::WindowInstance> select_windows(std::span<const dataset::WindowInstance> windows,
                                                    std::size_t max_windows) {
  const std::size_t n = windows.size();
  if (max_windows == 0 || max_windows >= n) return {windows.begin(), windows.end()};
  std::vector<dataset::WindowInstance> out;
  out.reserve(max_windows);
  for (std::size_t i = 0; i < max_windows; ++i) out.push_back(windows[i * n / max_windows]);
  return out;
}

FidelityReport run(const ExperimentConfig& cfg, const RunOptions& options) {
  FidelityReport report;
  report.tool_version = std::string(tool_version());
  report.config_echo = cfg.echo();
  report.defaulted = cfg.defaulted;

  std::vector<dataset::RawSeries> series;
  if (cfg.data.kind == DataSource::Kind::kSynthetic) {
    report.dataset_name = "synthetic";
    series = dataset::make_synthetic(cfg.data.synthetic, stream_key({cfg.seed, hash_string("data")}));
  } else {
    report.dataset_name = cfg.data.csv_path.stem().string();
    series = dataset::load_csv(cfg.data.csv_path, cfg.data.schema, cfg.data.granularity,
                               cfg.data.csv);
  }
  if (cfg.n_series > 0 && cfg.n_series < series.size()) {
    series = dataset::sample_series(series, cfg.n_series,
                                    stream_key({cfg.seed, hash_string("series")}));
  }
  if (cfg.data.time_covariates) {
    for (auto& s : series) s = dataset::generate_time_covariates(s);
  }
  const auto data = dataset::frame_dataset(series, cfg.window_len, cfg.horizons, cfg.split_ratio);
  const auto windows = select_windows(data.test, cfg.max_windows);

  report.series_count = series.size();
  for (const auto& f : data.feature_specs) report.feature_names.push_back(f.name);
  report.window_len = data.window_len;
  report.horizons = data.horizons;
  report.train_windows = data.train.size();
  report.test_windows = data.test.size();
  report.evaluated_windows = windows.size();

  explainers::ExplainerContext ectx{&data.pool, cfg.shap};
  metrics::EvaluationContext ctx;
  ctx.pool = &data.pool;
  ctx.global_means = &data.global_means;
  ctx.seed = cfg.seed;
  ctx.jobs = std::max<std::size_t>(1, options.jobs);
  ctx.keep_importance = cfg.importance_windows;

  for (ModelKind mk : cfg.models) {
    const std::string model_name(to_string(mk));
    const auto model = train(mk, cfg, data);
    const auto perf = models::evaluate_performance(*model, data.test);
    report.performance.push_back({model_name, perf.nrmse, perf.nd});

    for (auto ek : cfg.explainers) {
      const auto explainer = explainers::make_explainer(ek, ectx);
      const std::string explainer_name(explainer->name());
      auto eval = metrics::evaluate_dataset(*model, *explainer, windows, cfg.metrics, ctx);
      for (auto& score : eval.scores) {
        report.scores.push_back({model_name, explainer_name, std::move(score), false});
      }
      for (auto& skip : eval.skipped) {
        report.skipped.push_back({model_name, explainer_name, std::move(skip)});
      }
      for (const auto& [index, mats] : eval.importance) {
        const auto& w = windows[index];
        for (const auto& m : mats) {
          for (std::size_t j = 0; j < m.phi.rows(); ++j) {
            for (std::size_t l = 0; l < m.phi.cols(); ++l) {
              report.importance.push_back({model_name, explainer_name, w.series_id, w.t_anchor,
                                           m.horizon + 1, j, l, report.feature_names.at(j),
                                           m.phi(j, l)});
            }
          }
        }
      }
    }
  }
  mark_best(report.scores);
  return report;
}

std::string report_json(const FidelityReport& r) {
  ordered_json out;
  out["tool"] = {{"name", "tsxfidel"}, {"version", r.tool_version}};
  out["config"] = ordered_json::parse(r.config_echo);
  out["defaulted"] = r.defaulted;
  out["dataset"] = {{"name", r.dataset_name},
                    {"series", r.series_count},
                    {"features", r.feature_names},
                    {"window_length", r.window_len},
                    {"horizons", r.horizons},
                    {"train_windows", r.train_windows},
                    {"test_windows", r.test_windows},
                    {"evaluated_windows", r.evaluated_windows}};
  out["aggregation"] = "monte-carlo samples, then windows, then horizons";

  ordered_json perf = ordered_json::array();
  for (const auto& p : r.performance) {
    perf.push_back({{"model", p.model}, {"nrmse", p.nrmse}, {"nd", p.nd}});
  }
  out["model_performance"] = perf;

  ordered_json scores = ordered_json::array();
  for (const auto& row : r.scores) {
    const auto& s = row.score;
    ordered_json horizons = ordered_json::array();
    for (std::size_t h = 0; h < s.per_horizon.size(); ++h) {
      horizons.push_back(estimate_json(s.per_horizon[h], h + 1, s.windows_per_horizon[h]));
    }
    scores.push_back({{"dataset", r.dataset_name},
                      {"model", row.model},
                      {"explainer", row.explainer},
                      {"metric", metrics::to_string(s.metric)},
                      {"direction", explainers::to_string(s.direction)},
                      {"parameter", s.parameter},
                      {"gamma", s.gamma},
                      {"total", s.total},
                      {"margin_of_error", s.total_margin},
                      {"windows", s.windows},
                      {"skipped", s.skipped},
                      {"never_crossed", s.never_crossed},
                      {"samples", total_samples(s)},
                      {"converged", all_converged(s)},
                      {"best", row.best},
                      {"per_horizon", horizons}});
  }
  out["scores"] = scores;

  ordered_json skipped = ordered_json::array();
  for (const auto& k : r.skipped) {
    skipped.push_back({{"model", k.model},
                       {"explainer", k.explainer},
                       {"series_id", k.window.series_id},
                       {"t_anchor", k.window.t_anchor},
                       {"horizon", k.window.horizon + 1},
                       {"metric", k.window.metric},
                       {"direction", k.window.direction},
                       {"reason", k.window.reason}});
  }
  out["skipped"] = skipped;
  return out.dump(2) + "\n";
}

std::string scores_csv(const FidelityReport& r) {
  std::string out =
      "dataset,model,explainer,metric,direction,parameter,gamma,total,margin_of_error,windows,"
      "skipped,never_crossed,samples,converged,best\n";
  for (const auto& row : r.scores) {
    const auto& s = row.score;
    out += quoted(r.dataset_name) + ',' + row.model + ',' + row.explainer + ',' +
           std::string(metrics::to_string(s.metric)) + ',' +
           std::string(explainers::to_string(s.direction)) + ',' + number(s.parameter) + ',' +
           number(s.gamma) + ',' + number(s.total) + ',' + number(s.total_margin) + ',' +
           std::to_string(s.windows) + ',' + std::to_string(s.skipped) + ',' +
           std::to_string(s.never_crossed) + ',' + std::to_string(total_samples(s)) + ',' +
           (all_converged(s) ? "true" : "false") + ',' + (row.best ? "true" : "false") + '\n';
  }
  return out;
}

std::string importance_csv(const FidelityReport& r) {
  std::string out = "dataset,model,explainer,series_id,t_anchor,horizon,j,l,feature,phi\n";
  for (const auto& m : r.importance) {
    out += quoted(r.dataset_name) + ',' + m.model + ',' + m.explainer + ',' +
           quoted(m.series_id) + ',' + std::to_string(m.t_anchor) + ',' +
           std::to_string(m.horizon) + ',' + std::to_string(m.feature) + ',' +
           std::to_string(m.lag) + ',' + quoted(m.feature_name) + ',' + number(m.phi) + '\n';
  }
  return out;
}

std::string model_perf_csv(const FidelityReport& r) {
  std::string out = "dataset,model,nrmse,nd\n";
  for (const auto& p : r.performance) {
    out += quoted(r.dataset_name) + ',' + p.model + ',' + number(p.nrmse) + ',' + number(p.nd) +
           '\n';
  }
  return out;
}

std::vector<std::filesystem::path> emit(const FidelityReport& report,
                                        const std::filesystem::path& out_dir,
                                        std::span<const Format> formats) {
  static constexpr Format kAll[] = {Format::kJson, Format::kCsv};
  if (formats.empty()) formats = kAll;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  }
  auto has = [&](Format f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& content) {
    const auto path = out_dir / name;
    write_file(path, content);
    written.push_back(path);
  };
  if (has(Format::kJson)) put("report.json", report_json(report));
  if (has(Format::kCsv)) {
    put("scores.csv", scores_csv(report));
    put("importance.csv", importance_csv(report));
    put("model_perf.csv", model_perf_csv(report));
  }
  return written;
}

}  // namespace tsxfidel::harness
