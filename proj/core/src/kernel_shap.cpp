#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>

#include "shapley_internal.hpp"
#include "tsxfidel/error.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/rng.hpp"

namespace tsxfidel::explainers {
namespace detail {
namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

// Mean model output over the background draws with absent cells replaced.
class CoalitionValue {
 public:
  CoalitionValue(const models::ForecastModel& model, const Matrix& x,
                 std::span<const std::size_t> horizons, std::vector<Matrix> backgrounds)
      : model_(model), x_(x), horizons_(horizons), backgrounds_(std::move(backgrounds)) {}

  std::vector<double> evaluate(std::span<const std::uint8_t> present) {
    std::vector<double> acc(horizons_.size(), 0.0);
    for (const Matrix& bg : backgrounds_) {
      work_ = bg;
      for (std::size_t c = 0; c < present.size(); ++c) {
        if (present[c]) work_.at_flat(c) = x_.at_flat(c);
      }
      add_prediction(work_, acc);
    }
    for (double& a : acc) a /= static_cast<double>(backgrounds_.size());
    return acc;
  }

  std::vector<double> full() {
    std::vector<double> out(horizons_.size(), 0.0);
    add_prediction(x_, out);
    return out;
  }

 private:
  void add_prediction(const Matrix& m, std::vector<double>& acc) const {
    if (horizons_.size() == 1) {
      acc[0] += model_.predict_horizon(m, horizons_[0]);
      return;
    }
    const auto all = model_.predict(m);
    for (std::size_t k = 0; k < horizons_.size(); ++k) acc[k] += all[horizons_[k]];
  }

  const models::ForecastModel& model_;
  const Matrix& x_;
  std::span<const std::size_t> horizons_;
  std::vector<Matrix> backgrounds_;
  Matrix work_;
};

void check_inputs(const models::ForecastModel& model, const Matrix& x,
                  const dataset::AblationPool& pool, std::size_t n_background) {
  if (x.rows() != model.features() || x.cols() != model.window_len()) {
    throw Error(ErrorCode::kShapeMismatch, "window shape does not match model");
  }
  if (pool.feature_count() != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "ablation pool feature count does not match window");
  }
  if (n_background == 0) {
    throw Error(ErrorCode::kInvalidArgument, "n_background must be positive");
  }
}

void for_each_subset(std::size_t n, std::size_t k,
                     const std::function<void(const std::vector<std::uint8_t>&)>& visit) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::uint8_t> mask(n);
  while (true) {
    std::fill(mask.begin(), mask.end(), 0);
    for (std::size_t i : idx) mask[i] = 1;
    visit(mask);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

std::vector<std::size_t> all_horizons(const models::ForecastModel& model) {
  std::vector<std::size_t> h(model.horizons());
  std::iota(h.begin(), h.end(), 0);
  return h;
}

std::vector<WeightedCoalition> kernel_coalitions(std::size_t players, std::size_t budget,
                                                 bool force_sampling, Rng& rng) {
  std::vector<WeightedCoalition> out;
  const std::size_t P = players;
  if (P < 2 || budget == 0) return out;
  const std::size_t n_sizes = P / 2;          // sizes 1..n_sizes (and complements)
  const std::size_t n_paired = (P - 1) / 2;   // sizes whose complement differs in size

  std::vector<double> size_weight(n_sizes);
  for (std::size_t s = 1; s <= n_sizes; ++s) {
    size_weight[s - 1] = static_cast<double>(P - 1) / static_cast<double>(s * (P - s));
    if (s <= n_paired) size_weight[s - 1] *= 2.0;
  }
  const double total = std::accumulate(size_weight.begin(), size_weight.end(), 0.0);
  for (double& w : size_weight) w /= total;

  auto complement = [](std::vector<std::uint8_t> m) {
    for (auto& b : m) b = static_cast<std::uint8_t>(1 - b);
    return m;
  };

  std::size_t full_sizes = 0;
  double samples_left = static_cast<double>(budget);
  if (!force_sampling) {
    std::vector<double> remaining = size_weight;
    for (std::size_t s = 1; s <= n_sizes; ++s) {
      const bool paired = s <= n_paired;
      const double n_subsets = binomial(P, s) * (paired ? 2.0 : 1.0);
      if (samples_left * remaining[s - 1] / n_subsets < 1.0 - 1e-8) break;
      ++full_sizes;
      samples_left -= n_subsets;
      if (remaining[s - 1] < 1.0) {
        const double denom = 1.0 - remaining[s - 1];
        for (double& w : remaining) w /= denom;
      }
      double w = size_weight[s - 1] / binomial(P, s);
      if (paired) w /= 2.0;
      for_each_subset(P, s, [&](const std::vector<std::uint8_t>& mask) {
        out.push_back({mask, w});
        if (paired) out.push_back({complement(mask), w});
      });
    }
  }
  if (full_sizes == n_sizes || samples_left < 1.0) return out;

  std::vector<double> rest(size_weight.begin() + static_cast<std::ptrdiff_t>(full_sizes),
                           size_weight.end());
  const double weight_left = std::accumulate(rest.begin(), rest.end(), 0.0);
  std::discrete_distribution<std::size_t> pick_size(rest.begin(), rest.end());
  std::map<std::vector<std::uint8_t>, std::size_t> index;
  const std::size_t first_sampled = out.size();
  auto add = [&](std::vector<std::uint8_t> mask) {
    auto it = index.find(mask);
    if (it != index.end()) {
      out[it->second].weight += 1.0;
      return;
    }
    index.emplace(mask, out.size());
    out.push_back({std::move(mask), 1.0});
    samples_left -= 1.0;
  };
  std::vector<std::size_t> perm(P);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 4 * budget + 100;
  while (samples_left >= 1.0 && attempts++ < max_attempts) {
    const std::size_t s = full_sizes + 1 + pick_size(rng);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, P - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    std::vector<std::uint8_t> mask(P, 0);
    for (std::size_t i = 0; i < s; ++i) mask[perm[i]] = 1;
    const bool paired = s <= n_paired;
    if (paired && samples_left >= 2.0) {
      add(complement(mask));
    }
    add(std::move(mask));
  }
  double sampled_total = 0.0;
  for (std::size_t i = first_sampled; i < out.size(); ++i) sampled_total += out[i].weight;
  for (std::size_t i = first_sampled; i < out.size(); ++i) {
    out[i].weight *= weight_left / sampled_total;
  }
  return out;
}

std::vector<ImportanceMatrix> kernel_shap(const models::ForecastModel& model, const Matrix& x,
                                          std::span<const std::size_t> horizons,
                                          const dataset::AblationPool& pool,
                                          const KernelShapConfig& config, std::uint64_t seed) {
  check_inputs(model, x, pool, config.n_background);
  const std::size_t P = x.size();
  const std::size_t H = horizons.size();
  const std::size_t budget_total =
      config.n_coalitions == 0 ? default_coalition_budget(P) : config.n_coalitions;
  if (budget_total < P + 2) {
    throw Error(ErrorCode::kInvalidArgument, "n_coalitions must be at least J*L + 2 (" +
                                                 std::to_string(P + 2) + ")");
  }

  CoalitionValue value(model, x, horizons,
                       draw_background(x.rows(), x.cols(), pool, config.n_background, seed));
  const std::vector<std::uint8_t> none(P, 0);
  const auto base = value.evaluate(none);
  const auto fx = value.full();

  std::vector<ImportanceMatrix> result(H);
  for (std::size_t k = 0; k < H; ++k) {
    result[k] = {Matrix(x.rows(), x.cols()), horizons[k], "kernel-shap", base[k]};
  }
  if (P == 1) {
    for (std::size_t k = 0; k < H; ++k) result[k].phi.at_flat(0) = fx[k] - base[k];
    return result;
  }

  Rng rng = make_rng(stream_key({seed, hash_string("kernel_coalitions")}));
  const auto coalitions = kernel_coalitions(P, budget_total - 2, config.force_sampling, rng);
  const std::size_t m = coalitions.size();
  const std::size_t last = P - 1;

  // Eliminate the last player through the efficiency constraint:
  // phi_last = (f(x) - base) - sum(other phi).
  Eigen::MatrixXd design(m, P - 1);
  Eigen::MatrixXd rhs(m, H);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& c = coalitions[r];
    const double sw = std::sqrt(c.weight);
    const auto v = value.evaluate(c.present);
    const double z_last = c.present[last];
    for (std::size_t i = 0; i < last; ++i) {
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          sw * (static_cast<double>(c.present[i]) - z_last);
    }
    for (std::size_t k = 0; k < H; ++k) {
      rhs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          sw * (v[k] - base[k] - z_last * (fx[k] - base[k]));
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (m < P - 1 || qr.rank() < static_cast<Eigen::Index>(P - 1)) {
    throw Error(ErrorCode::kSingularSystem,
                "coalition sample does not identify all " + std::to_string(P) +
                    " attributions; raise n_coalitions");
  }
  const Eigen::MatrixXd beta = qr.solve(rhs);
  for (std::size_t k = 0; k < H; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
      const double phi = beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      result[k].phi.at_flat(i) = phi;
      sum += phi;
    }
    result[k].phi.at_flat(last) = (fx[k] - base[k]) - sum;
  }
  return result;
}

std::vector<ImportanceMatrix> exact_shapley(const models::ForecastModel& model, const Matrix& x,
                                            std::span<const std::size_t> horizons,
                                            const dataset::AblationPool& pool,
                                            std::size_t n_background, std::uint64_t seed) {
  check_inputs(model, x, pool, n_background);
  const std::size_t P = x.size();
  if (P > kMaxExactPlayers) {
    throw Error(ErrorCode::kTooManyPlayers, std::to_string(P) + " cells exceed the exact limit of " +
                                                std::to_string(kMaxExactPlayers));
  }
  const std::size_t H = horizons.size();
  CoalitionValue value(model, x, horizons,
                       draw_background(x.rows(), x.cols(), pool, n_background, seed));
  const std::size_t n_masks = std::size_t{1} << P;
  std::vector<std::vector<double>> v(n_masks);
  std::vector<std::uint8_t> present(P);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (std::size_t c = 0; c < P; ++c) present[c] = (mask >> c) & 1U;
    v[mask] = mask == n_masks - 1 ? value.full() : value.evaluate(present);
  }
  // Weight of a coalition of size s not containing the player: s!(P-s-1)!/P!.
  std::vector<double> w(P);
  for (std::size_t s = 0; s < P; ++s) {
    w[s] = 1.0 / (static_cast<double>(P) * binomial(P - 1, s));
  }
  std::vector<ImportanceMatrix> result(H);
  for (std::size_t k = 0; k < H; ++k) {
    result[k] = {Matrix(x.rows(), x.cols()), horizons[k], "exact-shapley", v[0][k]};
  }
  for (std::size_t i = 0; i < P; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    std::vector<double> phi(H, 0.0);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const double weight = w[static_cast<std::size_t>(std::popcount(mask))];
      for (std::size_t k = 0; k < H; ++k) phi[k] += weight * (v[mask | bit][k] - v[mask][k]);
    }
    for (std::size_t k = 0; k < H; ++k) result[k].phi.at_flat(i) = phi[k];
  }
  return result;
}

}  // namespace detail

std::size_t default_coalition_budget(std::size_t players) {
  if (players >= 11) return 2048;
  return std::size_t{1} << players;
}

std::vector<Matrix> draw_background(std::size_t features, std::size_t window_len,
                                    const dataset::AblationPool& pool, std::size_t n,
                                    std::uint64_t seed) {
  Rng rng = make_rng(stream_key({seed, hash_string("background")}));
  std::vector<Matrix> out;
  out.reserve(n);
  for (std::size_t b = 0; b < n; ++b) {
    Matrix m(features, window_len);
    for (std::size_t j = 0; j < features; ++j) {
      for (std::size_t l = 0; l < window_len; ++l) m(j, l) = pool.draw(j, rng);
    }
    out.push_back(std::move(m));
  }
  return out;
}

ImportanceMatrix explain_kernel_shap(const models::ForecastModel& model, const Matrix& x,
                                     std::size_t horizon, const dataset::AblationPool& pool,
                                     const KernelShapConfig& config, std::uint64_t seed) {
  const std::size_t h[] = {horizon};
  return std::move(detail::kernel_shap(model, x, h, pool, config, seed).front());
}

ImportanceMatrix exact_shapley(const models::ForecastModel& model, const Matrix& x,
                               std::size_t horizon, const dataset::AblationPool& pool,
                               std::size_t n_background, std::uint64_t seed) {
  const std::size_t h[] = {horizon};
  return std::move(detail::exact_shapley(model, x, h, pool, n_background, seed).front());
}

}  // namespace tsxfidel::explainers
