#include <algorithm>
#include <numeric>
#include <string>

#include "shapley_internal.hpp"
#include "tsxfidel/error.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/rng.hpp"

namespace tsxfidel::explainers {
namespace {

constexpr std::pair<ExplainerKind, std::string_view> kExplainerNames[] = {
    {ExplainerKind::kRandom, "random"},
    {ExplainerKind::kOmissionLocal, "omission-local"},
    {ExplainerKind::kOmissionGlobal, "omission-global"},
    {ExplainerKind::kKernelShap, "kernel-shap"},
    {ExplainerKind::kExactShapley, "exact-shapley"},
};

std::vector<ImportanceMatrix> omission_all(const models::ForecastModel& model, const Matrix& x,
                                           std::span<const std::size_t> horizons,
                                           ReplacementKind scheme,
                                           std::span<const double> global_means) {
  const std::size_t J = x.rows();
  const std::size_t L = x.cols();
  std::vector<double> replacement(J);
  for (std::size_t j = 0; j < J; ++j) {
    if (scheme == ReplacementKind::kLocalMean) {
      replacement[j] = local_mean(x, j);
    } else if (scheme == ReplacementKind::kGlobalMean) {
      if (global_means.size() != J) {
        throw Error(ErrorCode::kInvalidArgument,
                    "global-mean omission needs one training mean per feature");
      }
      replacement[j] = global_means[j];
    } else {
      throw Error(ErrorCode::kInvalidArgument, "omission supports local or global mean only");
    }
  }
  const std::string method =
      scheme == ReplacementKind::kLocalMean ? "omission-local" : "omission-global";

  auto evaluate = [&](const Matrix& m) {
    std::vector<double> out(horizons.size());
    if (horizons.size() == 1) {
      out[0] = model.predict_horizon(m, horizons[0]);
    } else {
      const auto all = model.predict(m);
      for (std::size_t k = 0; k < horizons.size(); ++k) out[k] = all[horizons[k]];
    }
    return out;
  };

  const auto base = evaluate(x);
  std::vector<ImportanceMatrix> result(horizons.size());
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    result[k] = {Matrix(J, L), horizons[k], method, 0.0};
  }
  Matrix work = x;
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t l = 0; l < L; ++l) {
      const double original = work(j, l);
      work(j, l) = replacement[j];
      const auto f = evaluate(work);
      work(j, l) = original;
      for (std::size_t k = 0; k < horizons.size(); ++k) result[k].phi(j, l) = base[k] - f[k];
    }
  }
  return result;
}

class RandomExplainer final : public Explainer {
 public:
  ExplainerKind kind() const override { return ExplainerKind::kRandom; }
  std::vector<ImportanceMatrix> explain(const models::ForecastModel& model, const Matrix& x,
                                        std::span<const double>,
                                        std::uint64_t seed) const override {
    std::vector<ImportanceMatrix> out;
    for (std::size_t h = 0; h < model.horizons(); ++h) {
      out.push_back(explain_random(x, h, stream_key({seed, h})));
    }
    return out;
  }
};

class OmissionExplainer final : public Explainer {
 public:
  explicit OmissionExplainer(ReplacementKind scheme) : scheme_(scheme) {}
  ExplainerKind kind() const override {
    return scheme_ == ReplacementKind::kLocalMean ? ExplainerKind::kOmissionLocal
                                                  : ExplainerKind::kOmissionGlobal;
  }
  std::vector<ImportanceMatrix> explain(const models::ForecastModel& model, const Matrix& x,
                                        std::span<const double> global_means,
                                        std::uint64_t) const override {
    return omission_all(model, x, detail::all_horizons(model), scheme_, global_means);
  }

 private:
  ReplacementKind scheme_;
};

class KernelShapExplainer final : public Explainer {
 public:
  explicit KernelShapExplainer(ExplainerContext ctx) : ctx_(ctx) {}
  ExplainerKind kind() const override { return ExplainerKind::kKernelShap; }
  std::vector<ImportanceMatrix> explain(const models::ForecastModel& model, const Matrix& x,
                                        std::span<const double>,
                                        std::uint64_t seed) const override {
    return detail::kernel_shap(model, x, detail::all_horizons(model), *ctx_.pool, ctx_.shap, seed);
  }

 private:
  ExplainerContext ctx_;
};

class ExactShapleyExplainer final : public Explainer {
 public:
  explicit ExactShapleyExplainer(ExplainerContext ctx) : ctx_(ctx) {}
  ExplainerKind kind() const override { return ExplainerKind::kExactShapley; }
  std::vector<ImportanceMatrix> explain(const models::ForecastModel& model, const Matrix& x,
                                        std::span<const double>,
                                        std::uint64_t seed) const override {
    return detail::exact_shapley(model, x, detail::all_horizons(model), *ctx_.pool,
                                 ctx_.shap.n_background, seed);
  }

 private:
  ExplainerContext ctx_;
};

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::kMostPositive ? "positive" : "negative";
}

std::string_view to_string(ExplainerKind k) {
  for (const auto& [kind, name] : kExplainerNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

bool parse_explainer_kind(std::string_view name, ExplainerKind& out) {
  for (const auto& [kind, n] : kExplainerNames) {
    if (n == name) {
      out = kind;
      return true;
    }
  }
  return false;
}

double local_mean(const Matrix& x, std::size_t feature) {
  if (feature >= x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "feature index out of range");
  }
  const auto row = x.row(feature);
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

ImportanceMatrix explain_random(const Matrix& x, std::size_t horizon, std::uint64_t seed) {
  Rng rng = make_rng(stream_key({seed, hash_string("random")}));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ImportanceMatrix imp{Matrix(x.rows(), x.cols()), horizon, "random", 0.0};
  for (double& v : imp.phi.flat()) v = u(rng);
  return imp;
}

ImportanceMatrix explain_omission(const models::ForecastModel& model, const Matrix& x,
                                  std::size_t horizon, ReplacementKind scheme,
                                  std::span<const double> global_means) {
  const std::size_t h[] = {horizon};
  return std::move(omission_all(model, x, h, scheme, global_means).front());
}

Ranking rank_cells(const ImportanceMatrix& imp, Direction direction) {
  const auto phi = imp.phi.flat();
  Ranking r;
  r.direction = direction;
  r.cells.resize(phi.size());
  std::iota(r.cells.begin(), r.cells.end(), 0);
  if (direction == Direction::kMostPositive) {
    std::stable_sort(r.cells.begin(), r.cells.end(),
                     [&](std::size_t a, std::size_t b) { return phi[a] > phi[b]; });
  } else {
    std::stable_sort(r.cells.begin(), r.cells.end(),
                     [&](std::size_t a, std::size_t b) { return phi[a] < phi[b]; });
  }
  return r;
}

std::unique_ptr<Explainer> make_explainer(ExplainerKind kind, const ExplainerContext& context) {
  switch (kind) {
    case ExplainerKind::kRandom:
      return std::make_unique<RandomExplainer>();
    case ExplainerKind::kOmissionLocal:
      return std::make_unique<OmissionExplainer>(ReplacementKind::kLocalMean);
    case ExplainerKind::kOmissionGlobal:
      return std::make_unique<OmissionExplainer>(ReplacementKind::kGlobalMean);
    case ExplainerKind::kKernelShap:
    case ExplainerKind::kExactShapley:
      if (context.pool == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "Shapley explainers need an ablation pool");
      }
      if (kind == ExplainerKind::kKernelShap) return std::make_unique<KernelShapExplainer>(context);
      return std::make_unique<ExactShapleyExplainer>(context);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown explainer kind");
}

}  // namespace tsxfidel::explainers
