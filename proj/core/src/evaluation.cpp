#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>

#include "tsxfidel/error.hpp"
#include "tsxfidel/metrics.hpp"

namespace tsxfidel::metrics {
namespace {

constexpr Direction kDirections[] = {Direction::kMostPositive, Direction::kMostNegative};

struct SlotResult {
  std::vector<std::optional<MCEstimate>> per_horizon;
  std::vector<std::string> skip_reason;  // empty when evaluated
  std::size_t never_crossed = 0;
};

struct WindowResult {
  std::vector<SlotResult> slots;
  std::vector<explainers::ImportanceMatrix> importance;
};

struct Slot {
  Metric metric;
  Direction direction;
};

std::vector<Slot> enabled_slots(const MetricConfig& config) {
  std::vector<Slot> slots;
  if (config.aopcr) {
    for (Direction d : kDirections) slots.push_back({Metric::kAopcr, d});
  }
  if (config.apt) {
    for (Direction d : kDirections) slots.push_back({Metric::kApt, d});
  }
  return slots;
}

WindowResult evaluate_window(const models::ForecastModel& model,
                             const explainers::Explainer& explainer,
                             const dataset::WindowInstance& w, const MetricConfig& config,
                             const EvaluationContext& ctx, std::span<const Slot> slots,
                             bool keep_importance) {
  const std::size_t H = model.horizons();
  WindowResult result;
  result.slots.resize(slots.size());
  for (auto& s : result.slots) {
    s.per_horizon.resize(H);
    s.skip_reason.resize(H);
  }
  const std::uint64_t key = window_key(w);
  try {
    std::span<const double> means;
    if (ctx.global_means != nullptr) {
      auto it = ctx.global_means->find(w.series_id);
      if (it != ctx.global_means->end()) means = it->second;
    }
    const auto explain_seed =
        stream_key({ctx.seed, hash_string("explain"), key, hash_string(explainer.name())});
    auto imps = explainer.explain(model, w.x, means, explain_seed);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const Ranking ranking = explainers::rank_cells(imps[h], slots[s].direction);
        const std::uint64_t stream =
            stream_key({ctx.seed, key, h, hash_string(to_string(slots[s].metric))});
        SlotResult& out = result.slots[s];
        if (slots[s].metric == Metric::kAopcr) {
          out.per_horizon[h] =
              aopcr_tau(model, w.x, ranking, h, config.k, *ctx.pool, config.mc, stream);
        } else {
          const auto apt = apt_tau(model, w.x, ranking, h,
                                   signed_alpha(config.alpha, slots[s].direction), *ctx.pool,
                                   config.mc, stream);
          if (apt.near_zero) {
            out.skip_reason[h] = "near-zero-prediction";
          } else {
            out.per_horizon[h] = apt.estimate;
            out.never_crossed += apt.never_crossed;
          }
        }
      }
    }
    if (keep_importance) result.importance = std::move(imps);
  } catch (const std::exception& e) {
    for (auto& s : result.slots) {
      for (std::size_t h = 0; h < H; ++h) {
        s.per_horizon[h].reset();
        s.skip_reason[h] = std::string("error: ") + e.what();
      }
    }
  }
  return result;
}

}  // namespace

std::uint64_t window_key(const dataset::WindowInstance& w) {
  return stream_key({hash_string(w.series_id), w.t_anchor});
}

DatasetEvaluation evaluate_dataset(const models::ForecastModel& model,
                                   const explainers::Explainer& explainer,
                                   std::span<const dataset::WindowInstance> windows,
                                   const MetricConfig& config, const EvaluationContext& context) {
  if (context.pool == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation needs an ablation pool");
  }
  if (config.aopcr && (config.k < 1 || config.k > model.input_size())) {
    throw Error(ErrorCode::kKOutOfRange, "K = " + std::to_string(config.k) + " outside [1, " +
                                             std::to_string(model.input_size()) + "]");
  }
  const auto slots = enabled_slots(config);
  const std::size_t n = windows.size();
  std::vector<WindowResult> results(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      results[i] = evaluate_window(model, explainer, windows[i], config, context, slots,
                                   i < context.keep_importance);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(context.jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  // Deterministic reduction in window order.
  const std::size_t H = model.horizons();
  DatasetEvaluation eval;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    FidelityScore score;
    score.metric = slots[s].metric;
    score.direction = slots[s].direction;
    score.parameter = slots[s].metric == Metric::kAopcr
                          ? static_cast<double>(config.k)
                          : signed_alpha(config.alpha, slots[s].direction);
    score.gamma = config.gamma;
    score.per_horizon.resize(H);
    score.windows_per_horizon.assign(H, 0);
    std::vector<double> means(H);
    std::vector<double> margins(H);
    std::vector<bool> window_used(n, false);
    for (std::size_t h = 0; h < H; ++h) {
      std::vector<double> vals;
      MCEstimate agg;
      agg.converged = true;
      const MCEstimate* only = nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& slot = results[i].slots[s];
        if (!slot.per_horizon[h]) {
          ++score.skipped;
          eval.skipped.push_back({windows[i].series_id, windows[i].t_anchor, h,
                                  std::string(to_string(slots[s].metric)),
                                  std::string(explainers::to_string(slots[s].direction)),
                                  slot.skip_reason[h]});
          continue;
        }
        const MCEstimate& e = *slot.per_horizon[h];
        window_used[i] = true;
        only = &e;
        vals.push_back(e.mean);
        agg.n_samples += e.n_samples;
        agg.converged = agg.converged && e.converged;
      }
      const std::size_t count = vals.size();
      score.windows_per_horizon[h] = count;
      if (count == 0) {
        agg.mean = std::numeric_limits<double>::quiet_NaN();
        agg.margin_of_error = std::numeric_limits<double>::quiet_NaN();
        agg.converged = false;
      } else if (count == 1) {
        agg.mean = only->mean;
        agg.margin_of_error = only->margin_of_error;
      } else {
        const auto c = static_cast<double>(count);
        agg.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / c;
        double ss = 0.0;
        for (double v : vals) ss += (v - agg.mean) * (v - agg.mean);
        const double var = ss / (c - 1.0);
        agg.margin_of_error = config.mc.z * std::sqrt(var) / std::sqrt(c);
      }
      score.per_horizon[h] = agg;
      means[h] = agg.mean;
      margins[h] = agg.margin_of_error;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (window_used[i]) ++score.windows;
      score.never_crossed += results[i].slots[s].never_crossed;
    }
    score.total = weighted_total(means, config.gamma);
    score.total_margin = weighted_total(margins, config.gamma);
    eval.scores.push_back(std::move(score));
  }
  for (std::size_t i = 0; i < n && i < context.keep_importance; ++i) {
    if (!results[i].importance.empty()) {
      eval.importance.emplace_back(i, std::move(results[i].importance));
    }
  }
  return eval;
}

}  // namespace tsxfidel::metrics
