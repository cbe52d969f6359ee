#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsxfidel/explainers.hpp"

namespace tsxfidel::explainers::detail {

std::vector<std::size_t> all_horizons(const models::ForecastModel& model);

std::vector<ImportanceMatrix> kernel_shap(const models::ForecastModel& model, const Matrix& x,
                                          std::span<const std::size_t> horizons,
                                          const dataset::AblationPool& pool,
                                          const KernelShapConfig& config, std::uint64_t seed);

std::vector<ImportanceMatrix> exact_shapley(const models::ForecastModel& model, const Matrix& x,
                                            std::span<const std::size_t> horizons,
                                            const dataset::AblationPool& pool,
                                            std::size_t n_background, std::uint64_t seed);

struct WeightedCoalition {
  std::vector<std::uint8_t> present;
  double weight = 0.0;
};

// Coalitions for the kernel regression (empty and full excluded). Sizes whose
// every subset fits in the budget are enumerated with exact kernel weights;
// the rest of the budget is drawn from the kernel size distribution.
std::vector<WeightedCoalition> kernel_coalitions(std::size_t players, std::size_t budget,
                                                 bool force_sampling, Rng& rng);

}  // namespace tsxfidel::explainers::detail
