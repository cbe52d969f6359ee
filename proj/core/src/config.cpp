#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "tsxfidel/error.hpp"
#include "tsxfidel/harness.hpp"

#ifndef TSXFIDEL_VERSION
#define TSXFIDEL_VERSION "0.0.0"
#endif

namespace tsxfidel::harness {
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is read as a size_t");

using json = nlohmann::json;
using dataset::FeatureKind;
using dataset::Granularity;

constexpr std::size_t kDefaultHorizons = 12;
constexpr std::size_t kHourlyWindow = 168;
constexpr std::size_t kDailyWindow = 30;

std::string_view granularity_name(Granularity g) {
  return g == Granularity::kHourly ? "hourly" : "daily";
}

std::string join(std::span<const std::string_view> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

// Walks the JSON tree, collecting diagnostics and the paths of defaulted values.
class Reader {
 public:
  std::vector<std::string> errors;
  std::vector<std::string> defaulted;

  void fail(const std::string& path, const std::string& message) {
    errors.push_back(path + ": " + message);
  }

  // Reports keys of `obj` outside `allowed`.
  void allow_keys(const json& obj, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        std::vector<std::string_view> names(allowed);
        fail(join_path(path, key), "unknown key; allowed: " + join(names));
      }
    }
  }

  // Returns the object at obj[key], or nullptr when absent. Records a
  // diagnostic when the value exists but is not an object.
  const json* object(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_object()) {
      fail(join_path(path, key), "expected an object");
      return nullptr;
    }
    return &*it;
  }

  template <class T>
  void get(const json& obj, const std::string& path, const char* key, T& out) {
    const std::string at = join_path(path, key);
    auto it = obj.find(key);
    if (it == obj.end()) {
      defaulted.push_back(at);
      return;
    }
    read(*it, at, out);
  }

  void read(const json& v, const std::string& at, double& out) {
    if (!v.is_number()) return fail(at, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(at, "must be finite");
  }

  void read(const json& v, const std::string& at, std::size_t& out) {
    if (v.is_number_unsigned()) {
      out = v.get<std::size_t>();
    } else if (v.is_number_integer()) {
      fail(at, "must be non-negative");
    } else {
      fail(at, "expected a non-negative integer");
    }
  }

  void read(const json& v, const std::string& at, int& out) {
    std::size_t tmp = 0;
    read(v, at, tmp);
    if (tmp > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
      return fail(at, "too large");
    }
    out = static_cast<int>(tmp);
  }

  void read(const json& v, const std::string& at, std::int64_t& out) {
    if (!v.is_number_integer()) return fail(at, "expected an integer");
    out = v.get<std::int64_t>();
  }

  void read(const json& v, const std::string& at, bool& out) {
    if (!v.is_boolean()) return fail(at, "expected true or false");
    out = v.get<bool>();
  }

  void read(const json& v, const std::string& at, std::string& out) {
    if (!v.is_string()) return fail(at, "expected a string");
    out = v.get<std::string>();
  }

  void read(const json& v, const std::string& at, Granularity& out) {
    if (!v.is_string()) return fail(at, "expected \"hourly\" or \"daily\"");
    const auto s = v.get<std::string>();
    if (s == "hourly") {
      out = Granularity::kHourly;
    } else if (s == "daily") {
      out = Granularity::kDaily;
    } else {
      fail(at, "unknown granularity '" + s + "'; allowed: hourly, daily");
    }
  }

  void read(const json& v, const std::string& at, std::vector<std::size_t>& out) {
    if (!v.is_array()) return fail(at, "expected an array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t n = 0;
      read(v[i], at + "[" + std::to_string(i) + "]", n);
      out.push_back(n);
    }
  }

  static std::string join_path(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }
};

void check(Reader& r, bool ok, const std::string& path, const std::string& message) {
  if (!ok) r.fail(path, message);
}

void read_synthetic(Reader& r, const json& obj, const std::string& path,
                    dataset::SyntheticConfig& s) {
  r.allow_keys(obj, path, {"n_series", "length", "features", "driver_lag", "driver_coef",
                           "noise_std", "trend", "period", "granularity", "start"});
  r.get(obj, path, "n_series", s.n_series);
  r.get(obj, path, "length", s.length);
  r.get(obj, path, "features", s.features);
  r.get(obj, path, "driver_lag", s.driver_lag);
  r.get(obj, path, "driver_coef", s.driver_coef);
  r.get(obj, path, "noise_std", s.noise_std);
  r.get(obj, path, "trend", s.trend);
  r.get(obj, path, "period", s.period);
  r.get(obj, path, "granularity", s.granularity);
  r.get(obj, path, "start", s.start);
  check(r, s.n_series >= 1, path + ".n_series", "must be at least 1");
  check(r, s.features >= 2, path + ".features", "must be at least 2 (target and driver)");
  check(r, s.noise_std >= 0.0, path + ".noise_std", "must be non-negative");
  check(r, s.period > 0.0, path + ".period", "must be positive");
}

void read_csv(Reader& r, const json& obj, const std::string& path,
              const std::filesystem::path& base_dir, DataSource& d) {
  r.allow_keys(obj, path,
               {"path", "features", "granularity", "timestamp_column", "series_column"});
  std::string file;
  if (!obj.contains("path")) {
    r.fail(path + ".path", "required");
  } else {
    r.read(obj["path"], path + ".path", file);
  }
  if (!file.empty()) {
    std::filesystem::path p(file);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    d.csv_path = p.lexically_normal();
    std::error_code ec;
    if (!std::filesystem::is_regular_file(d.csv_path, ec)) {
      r.fail(path + ".path", "file not found: " + d.csv_path.string());
    }
  }
  if (!obj.contains("granularity")) {
    r.fail(path + ".granularity", "required (hourly or daily)");
  } else {
    r.read(obj["granularity"], path + ".granularity", d.granularity);
  }
  r.get(obj, path, "timestamp_column", d.csv.timestamp_column);
  r.get(obj, path, "series_column", d.csv.series_column);

  const std::string fpath = path + ".features";
  auto it = obj.find("features");
  if (it == obj.end() || !it->is_array() || it->empty()) {
    r.fail(fpath, "required: non-empty array of {name, kind, target}");
    return;
  }
  d.schema.clear();
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& f = (*it)[i];
    const std::string at = fpath + "[" + std::to_string(i) + "]";
    if (!f.is_object()) {
      r.fail(at, "expected an object");
      continue;
    }
    r.allow_keys(f, at, {"name", "kind", "target"});
    dataset::FeatureSpec spec;
    if (!f.contains("name")) {
      r.fail(at + ".name", "required");
    } else {
      r.read(f["name"], at + ".name", spec.name);
    }
    std::string kind = "numeric";
    if (f.contains("kind")) r.read(f["kind"], at + ".kind", kind);
    if (kind == "numeric") {
      spec.kind = FeatureKind::kNumeric;
    } else if (kind == "categorical") {
      spec.kind = FeatureKind::kCategoricalEncoded;
    } else {
      r.fail(at + ".kind", "unknown kind '" + kind + "'; allowed: numeric, categorical");
    }
    if (f.contains("target")) r.read(f["target"], at + ".target", spec.is_target);
    d.schema.push_back(spec);
  }
  try {
    dataset::validate_schema(d.schema);
  } catch (const Error& e) {
    r.fail(fpath, e.what());
  }
}

void read_gbr(Reader& r, const json& obj, const std::string& path, models::GbrParams& p) {
  r.allow_keys(obj, path, {"learning_rate", "n_trees", "max_depth", "min_samples_leaf"});
  r.get(obj, path, "learning_rate", p.learning_rate);
  r.get(obj, path, "n_trees", p.n_trees);
  r.get(obj, path, "max_depth", p.max_depth);
  r.get(obj, path, "min_samples_leaf", p.min_samples_leaf);
  check(r, p.learning_rate > 0.0, path + ".learning_rate", "must be positive");
  check(r, p.max_depth >= 1, path + ".max_depth", "must be at least 1");
  check(r, p.min_samples_leaf >= 1, path + ".min_samples_leaf", "must be at least 1");
}

void read_tdnn(Reader& r, const json& obj, const std::string& path, models::TrainConfig& c) {
  r.allow_keys(obj, path, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                           "hidden", "init_scale"});
  r.get(obj, path, "epochs", c.epochs);
  r.get(obj, path, "batch_size", c.batch_size);
  r.get(obj, path, "learning_rate", c.adam.alpha);
  r.get(obj, path, "beta1", c.adam.beta1);
  r.get(obj, path, "beta2", c.adam.beta2);
  r.get(obj, path, "epsilon", c.adam.epsilon);
  r.get(obj, path, "hidden", c.hidden);
  r.get(obj, path, "init_scale", c.init_scale);
  check(r, c.batch_size >= 1, path + ".batch_size", "must be at least 1");
  check(r, c.adam.alpha > 0.0, path + ".learning_rate", "must be positive");
  check(r, c.adam.beta1 > 0.0 && c.adam.beta1 < 1.0, path + ".beta1", "must lie in (0, 1)");
  check(r, c.adam.beta2 > 0.0 && c.adam.beta2 < 1.0, path + ".beta2", "must lie in (0, 1)");
  check(r, c.adam.epsilon > 0.0, path + ".epsilon", "must be positive");
  check(r, c.init_scale >= 0.0, path + ".init_scale", "must be non-negative");
  check(r, std::all_of(c.hidden.begin(), c.hidden.end(), [](std::size_t n) { return n > 0; }),
        path + ".hidden", "layer widths must be positive");
}

void read_models(Reader& r, const json& root, ExperimentConfig& cfg) {
  static constexpr std::string_view kAllowed[] = {"gbr", "tdnn"};
  auto it = root.find("models");
  if (it == root.end()) {
    r.fail("models", "required: at least one of gbr, tdnn");
    return;
  }
  auto add = [&](const std::string& name, const std::string& at, const json* params) {
    ModelKind kind = ModelKind::kGbr;
    if (name == "gbr") {
      kind = ModelKind::kGbr;
    } else if (name == "tdnn") {
      kind = ModelKind::kTdnn;
    } else {
      r.fail(at, "unknown model '" + name + "'; allowed: " + join(kAllowed));
      return;
    }
    if (std::find(cfg.models.begin(), cfg.models.end(), kind) != cfg.models.end()) {
      r.fail(at, "model '" + name + "' listed twice");
      return;
    }
    cfg.models.push_back(kind);
    static const json kEmpty = json::object();
    const json& p = params != nullptr ? *params : kEmpty;
    if (!p.is_object()) {
      r.fail(at, "expected an object of hyperparameters");
      return;
    }
    if (kind == ModelKind::kGbr) {
      read_gbr(r, p, "models.gbr", cfg.gbr);
    } else {
      read_tdnn(r, p, "models.tdnn", cfg.tdnn);
    }
  };
  if (it->is_array()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string at = "models[" + std::to_string(i) + "]";
      if (!(*it)[i].is_string()) {
        r.fail(at, "expected a model name");
        continue;
      }
      add((*it)[i].get<std::string>(), at, nullptr);
    }
  } else if (it->is_object()) {
    for (const auto& [name, params] : it->items()) add(name, "models." + name, &params);
  } else {
    r.fail("models", "expected an array of names or an object of hyperparameters");
  }
  if (cfg.models.empty() && r.errors.empty()) r.fail("models", "at least one model is required");
  // Object iteration is alphabetical; keep a canonical order.
  std::sort(cfg.models.begin(), cfg.models.end());
}

void read_explainers(Reader& r, const json& root, ExperimentConfig& cfg) {
  static constexpr std::string_view kAllowed[] = {"random", "omission-local", "omission-global",
                                                  "kernel-shap", "exact-shapley"};
  auto it = root.find("explainers");
  if (it == root.end() || !it->is_array() || it->empty()) {
    r.fail("explainers", "required: non-empty array; allowed: " + join(kAllowed));
    return;
  }
  for (std::size_t i = 0; i < it->size(); ++i) {
    const std::string at = "explainers[" + std::to_string(i) + "]";
    const json& v = (*it)[i];
    if (!v.is_string()) {
      r.fail(at, "expected an explainer name; allowed: " + join(kAllowed));
      continue;
    }
    const auto name = v.get<std::string>();
    explainers::ExplainerKind kind{};
    if (!explainers::parse_explainer_kind(name, kind)) {
      r.fail(at, "unknown explainer '" + name + "'; allowed: " + join(kAllowed));
      continue;
    }
    if (std::find(cfg.explainers.begin(), cfg.explainers.end(), kind) != cfg.explainers.end()) {
      r.fail(at, "explainer '" + name + "' listed twice");
      continue;
    }
    cfg.explainers.push_back(kind);
  }
}

// A metric entry may be `true`/`false` or an object with "enabled" and its parameter.
template <class T>
void read_metric(Reader& r, const json& metrics, const char* key, const char* param, bool& enabled,
                 T& value) {
  const std::string path = std::string("metrics.") + key;
  auto it = metrics.find(key);
  if (it == metrics.end()) {
    r.defaulted.push_back(path + ".enabled");
    r.defaulted.push_back(path + "." + param);
    return;
  }
  if (it->is_boolean()) {
    enabled = it->get<bool>();
    r.defaulted.push_back(path + "." + param);
    return;
  }
  if (!it->is_object()) {
    r.fail(path, "expected true, false or an object");
    return;
  }
  r.allow_keys(*it, path, {"enabled", param});
  r.get(*it, path, "enabled", enabled);
  r.get(*it, path, param, value);
}

void read_metrics(Reader& r, const json& root, ExperimentConfig& cfg) {
  static const json kEmpty = json::object();
  const json* m = r.object(root, "", "metrics");
  const json& obj = m != nullptr ? *m : kEmpty;
  r.allow_keys(obj, "metrics", {"aopcr", "apt", "gamma", "monte_carlo"});
  auto& mc = cfg.metrics;
  read_metric(r, obj, "aopcr", "k", mc.aopcr, mc.k);
  read_metric(r, obj, "apt", "alpha", mc.apt, mc.alpha);
  r.get(obj, "metrics", "gamma", mc.gamma);
  check(r, mc.aopcr || mc.apt, "metrics", "at least one of aopcr, apt must be enabled");
  check(r, mc.alpha != 0.0 && std::abs(mc.alpha) < 1.0, "metrics.apt.alpha",
        "magnitude must lie in (0, 1)");
  mc.alpha = std::abs(mc.alpha);
  check(r, mc.gamma >= 0.0, "metrics.gamma", "must be non-negative");

  const json* carlo = r.object(obj, "metrics", "monte_carlo");
  const json& c = carlo != nullptr ? *carlo : kEmpty;
  const std::string at = "metrics.monte_carlo";
  r.allow_keys(c, at, {"threshold", "confidence", "min_n", "max_n"});
  r.get(c, at, "threshold", mc.mc.threshold);
  r.get(c, at, "confidence", cfg.confidence);
  r.get(c, at, "min_n", mc.mc.min_n);
  r.get(c, at, "max_n", mc.mc.max_n);
  check(r, mc.mc.threshold > 0.0, at + ".threshold", "must be positive");
  if (cfg.confidence > 0.0 && cfg.confidence < 1.0) {
    mc.mc.z = metrics::z_score_for(cfg.confidence);
  } else {
    r.fail(at + ".confidence", "must lie in (0, 1)");
  }
  check(r, mc.mc.min_n >= 2, at + ".min_n", "must be at least 2");
  check(r, mc.mc.max_n >= mc.mc.min_n, at + ".max_n", "must be at least min_n");
}

json synthetic_json(const dataset::SyntheticConfig& s) {
  return {{"n_series", s.n_series},       {"length", s.length},
          {"features", s.features},       {"driver_lag", s.driver_lag},
          {"driver_coef", s.driver_coef}, {"noise_std", s.noise_std},
          {"trend", s.trend},             {"period", s.period},
          {"granularity", granularity_name(s.granularity)},
          {"start", s.start}};
}

json csv_json(const DataSource& d) {
  json features = json::array();
  for (const auto& f : d.schema) {
    features.push_back({{"name", f.name},
                        {"kind", f.kind == FeatureKind::kNumeric ? "numeric" : "categorical"},
                        {"target", f.is_target}});
  }
  return {{"path", d.csv_path.generic_string()},
          {"granularity", granularity_name(d.granularity)},
          {"timestamp_column", d.csv.timestamp_column},
          {"series_column", d.csv.series_column},
          {"features", features}};
}

}  // namespace

std::string_view tool_version() { return TSXFIDEL_VERSION; }

std::string_view to_string(ModelKind k) { return k == ModelKind::kGbr ? "gbr" : "tdnn"; }

namespace {

std::string summarize(const std::vector<std::string>& diagnostics) {
  std::string msg = "invalid config (" + std::to_string(diagnostics.size()) + " problem" +
                    (diagnostics.size() == 1 ? "" : "s") + ")";
  for (const auto& d : diagnostics) msg += "\n  " + d;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::size_t ExperimentConfig::feature_count() const {
  if (data.kind == DataSource::Kind::kSynthetic) {
    const std::size_t covariates =
        data.time_covariates ? dataset::time_covariate_names(data.synthetic.granularity, {}).size()
                             : 0;
    return data.synthetic.features + covariates;
  }
  const std::size_t covariates =
      data.time_covariates ? dataset::time_covariate_names(data.granularity, data.schema).size()
                           : 0;
  return data.schema.size() + covariates;
}

std::string ExperimentConfig::echo() const {
  json data_json;
  if (data.kind == DataSource::Kind::kSynthetic) {
    data_json["synthetic"] = synthetic_json(data.synthetic);
  } else {
    data_json["csv"] = csv_json(data);
  }
  data_json["time_covariates"] = data.time_covariates;

  json models_json = json::object();
  for (ModelKind m : models) {
    if (m == ModelKind::kGbr) {
      models_json["gbr"] = {{"learning_rate", gbr.learning_rate},
                            {"n_trees", gbr.n_trees},
                            {"max_depth", gbr.max_depth},
                            {"min_samples_leaf", gbr.min_samples_leaf}};
    } else {
      models_json["tdnn"] = {{"epochs", tdnn.epochs},
                             {"batch_size", tdnn.batch_size},
                             {"learning_rate", tdnn.adam.alpha},
                             {"beta1", tdnn.adam.beta1},
                             {"beta2", tdnn.adam.beta2},
                             {"epsilon", tdnn.adam.epsilon},
                             {"hidden", tdnn.hidden},
                             {"init_scale", tdnn.init_scale}};
    }
  }
  json explainer_names = json::array();
  for (auto e : explainers) explainer_names.push_back(explainers::to_string(e));

  const json out = {
      {"name", name},
      {"seed", seed},
      {"output_dir", output_dir.generic_string()},
      {"data", data_json},
      {"window", {{"length", window_len}, {"horizons", horizons}}},
      {"n_series", n_series},
      {"split_ratio", split_ratio},
      {"models", models_json},
      {"explainers", explainer_names},
      {"kernel_shap",
       {{"n_coalitions", shap.n_coalitions},
        {"n_background", shap.n_background},
        {"force_sampling", shap.force_sampling}}},
      {"metrics",
       {{"aopcr", {{"enabled", metrics.aopcr}, {"k", metrics.k}}},
        {"apt", {{"enabled", metrics.apt}, {"alpha", metrics.alpha}}},
        {"gamma", metrics.gamma},
        {"monte_carlo",
         {{"threshold", metrics.mc.threshold},
          {"confidence", confidence},
          {"min_n", metrics.mc.min_n},
          {"max_n", metrics.mc.max_n}}}}},
      {"evaluation",
       {{"max_windows", max_windows}, {"importance_windows", importance_windows}}},
  };
  return out.dump(2);
}

ExperimentConfig validate_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level must be an object"});

  Reader r;
  ExperimentConfig cfg;
  r.allow_keys(root, "", {"name", "seed", "output_dir", "data", "window", "n_series",
                          "split_ratio", "models", "explainers", "kernel_shap", "metrics",
                          "evaluation"});
  r.get(root, "", "name", cfg.name);
  r.get(root, "", "seed", cfg.seed);
  std::string out_dir = cfg.output_dir.string();
  r.get(root, "", "output_dir", out_dir);
  cfg.output_dir = out_dir;

  // Data source.
  static const json kEmpty = json::object();
  const json* data = r.object(root, "", "data");
  if (data == nullptr) {
    if (!root.contains("data")) r.fail("data", "required: one of data.csv, data.synthetic");
  } else {
    r.allow_keys(*data, "data", {"csv", "synthetic", "time_covariates"});
    const json* csv = r.object(*data, "data", "csv");
    const json* syn = r.object(*data, "data", "synthetic");
    if ((csv != nullptr) == (syn != nullptr)) {
      r.fail("data", "exactly one of data.csv, data.synthetic is required");
    } else if (csv != nullptr) {
      cfg.data.kind = DataSource::Kind::kCsv;
      read_csv(r, *csv, "data.csv", base_dir, cfg.data);
    } else {
      cfg.data.kind = DataSource::Kind::kSynthetic;
      read_synthetic(r, *syn, "data.synthetic", cfg.data.synthetic);
    }
    r.get(*data, "data", "time_covariates", cfg.data.time_covariates);
  }
  const Granularity granularity = cfg.data.kind == DataSource::Kind::kSynthetic
                                      ? cfg.data.synthetic.granularity
                                      : cfg.data.granularity;

  // Window: L defaults by granularity (168 hourly, 30 daily), t0 to 12.
  const json* window = r.object(root, "", "window");
  const json& w = window != nullptr ? *window : kEmpty;
  r.allow_keys(w, "window", {"length", "horizons"});
  cfg.window_len = granularity == Granularity::kHourly ? kHourlyWindow : kDailyWindow;
  cfg.horizons = kDefaultHorizons;
  r.get(w, "window", "length", cfg.window_len);
  r.get(w, "window", "horizons", cfg.horizons);
  check(r, cfg.window_len >= 1, "window.length", "must be at least 1");
  check(r, cfg.horizons >= 1, "window.horizons", "must be at least 1");

  r.get(root, "", "n_series", cfg.n_series);
  r.get(root, "", "split_ratio", cfg.split_ratio);
  check(r, cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0, "split_ratio", "must lie in (0, 1)");

  read_models(r, root, cfg);
  read_explainers(r, root, cfg);

  const json* shap = r.object(root, "", "kernel_shap");
  const json& s = shap != nullptr ? *shap : kEmpty;
  r.allow_keys(s, "kernel_shap", {"n_coalitions", "n_background", "force_sampling"});
  r.get(s, "kernel_shap", "n_coalitions", cfg.shap.n_coalitions);
  r.get(s, "kernel_shap", "n_background", cfg.shap.n_background);
  r.get(s, "kernel_shap", "force_sampling", cfg.shap.force_sampling);
  check(r, cfg.shap.n_background >= 1, "kernel_shap.n_background", "must be at least 1");

  read_metrics(r, root, cfg);

  const json* eval = r.object(root, "", "evaluation");
  const json& e = eval != nullptr ? *eval : kEmpty;
  r.allow_keys(e, "evaluation", {"max_windows", "importance_windows"});
  r.get(e, "evaluation", "max_windows", cfg.max_windows);
  r.get(e, "evaluation", "importance_windows", cfg.importance_windows);

  // Checks that depend on the cell count P = J * L.
  if (cfg.data.kind == DataSource::Kind::kSynthetic || !cfg.data.schema.empty()) {
    const std::size_t players = cfg.feature_count() * cfg.window_len;
    const std::string p = std::to_string(players);
    if (cfg.metrics.aopcr && (cfg.metrics.k < 1 || cfg.metrics.k > players)) {
      r.fail("metrics.aopcr.k", "K = " + std::to_string(cfg.metrics.k) + " outside [1, J*L = " +
                                    p + "]");
    }
    const bool uses_shap = std::find(cfg.explainers.begin(), cfg.explainers.end(),
                                     explainers::ExplainerKind::kKernelShap) != cfg.explainers.end();
    if (uses_shap && cfg.shap.n_coalitions != 0 && cfg.shap.n_coalitions < players + 2) {
      r.fail("kernel_shap.n_coalitions", "must be 0 (automatic) or at least J*L + 2 = " +
                                             std::to_string(players + 2));
    }
    const bool uses_exact =
        std::find(cfg.explainers.begin(), cfg.explainers.end(),
                  explainers::ExplainerKind::kExactShapley) != cfg.explainers.end();
    if (uses_exact && players > explainers::kMaxExactPlayers) {
      r.fail("explainers", "exact-shapley needs J*L <= " +
                               std::to_string(explainers::kMaxExactPlayers) + ", got " + p);
    }
  }

  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  cfg.defaulted = std::move(r.defaulted);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open config file"});
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config(text.str(), path.parent_path());
}

}  // namespace tsxfidel::harness
