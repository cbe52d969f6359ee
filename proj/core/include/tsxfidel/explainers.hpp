#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/matrix.hpp"
#include "tsxfidel/models.hpp"

namespace tsxfidel::explainers {

// Signed attribution of one forecast horizon to every window cell (j, l).
struct ImportanceMatrix {
  Matrix phi;
  std::size_t horizon = 0;  // zero-based
  std::string method;
  double base_value = 0.0;  // Shapley methods only: value of the empty coalition
};

enum class Direction { kMostPositive, kMostNegative };
std::string_view to_string(Direction d);

// Permutation of flat cell indices j * L + l.
struct Ranking {
  std::vector<std::size_t> cells;
  Direction direction = Direction::kMostPositive;
};

enum class ReplacementKind { kLocalMean, kGlobalMean, kMarginalDraw };

enum class ExplainerKind { kRandom, kOmissionLocal, kOmissionGlobal, kKernelShap, kExactShapley };
std::string_view to_string(ExplainerKind k);
// Accepts the names produced by to_string ("random", "omission-local", ...).
bool parse_explainer_kind(std::string_view name, ExplainerKind& out);

double local_mean(const Matrix& x, std::size_t feature);

// Scores are i.i.d. U(-1, 1), so either ranking direction is uniformly random.
ImportanceMatrix explain_random(const Matrix& x, std::size_t horizon, std::uint64_t seed);

// phi_jl = f(x) - f(x with cell (j, l) set to the feature's local or global
// mean). Uses exactly J*L + 1 model evaluations. `global_means` is required
// for kGlobalMean and holds one training mean per feature.
ImportanceMatrix explain_omission(const models::ForecastModel& model, const Matrix& x,
                                  std::size_t horizon, ReplacementKind scheme,
                                  std::span<const double> global_means = {});

struct KernelShapConfig {
  std::size_t n_coalitions = 0;  // 0 selects min(2^P, 2048)
  std::size_t n_background = 16;
  // Skip exhaustive enumeration of small coalition sizes and draw every
  // coalition from the kernel distribution.
  bool force_sampling = false;
};

std::size_t default_coalition_budget(std::size_t players);

// Sampling KernelSHAP over the P = J*L window cells. Absent cells take
// marginal draws from the pool (n_background draws, shared by every
// coalition). Local accuracy base_value + sum(phi) = f(x) is imposed as an
// equality constraint. Throws SingularSystem if the sampled design is rank
// deficient.
ImportanceMatrix explain_kernel_shap(const models::ForecastModel& model, const Matrix& x,
                                     std::size_t horizon, const dataset::AblationPool& pool,
                                     const KernelShapConfig& config, std::uint64_t seed);

inline constexpr std::size_t kMaxExactPlayers = 12;

// Classical Shapley values over all 2^P coalitions with the same value
// function as explain_kernel_shap (identical background draws for a given
// seed and n_background). Throws TooManyPlayers when P > 12.
ImportanceMatrix exact_shapley(const models::ForecastModel& model, const Matrix& x,
                               std::size_t horizon, const dataset::AblationPool& pool,
                               std::size_t n_background, std::uint64_t seed);

// Background matrices: each cell an independent draw from its feature's pool.
std::vector<Matrix> draw_background(std::size_t features, std::size_t window_len,
                                    const dataset::AblationPool& pool, std::size_t n,
                                    std::uint64_t seed);

// MostPositive sorts phi descending, MostNegative ascending; ties by (j, l).
Ranking rank_cells(const ImportanceMatrix& imp, Direction direction);

// Polymorphic front end used by the evaluation sweep: explains every horizon
// of one window in a single call so that model evaluations are shared.
struct ExplainerContext {
  const dataset::AblationPool* pool = nullptr;
  KernelShapConfig shap;
};

class Explainer {
 public:
  virtual ~Explainer() = default;
  virtual ExplainerKind kind() const = 0;
  std::string_view name() const { return to_string(kind()); }
  // `global_means` are the window's series training means (used by
  // omission-global only).
  virtual std::vector<ImportanceMatrix> explain(const models::ForecastModel& model,
                                                const Matrix& x,
                                                std::span<const double> global_means,
                                                std::uint64_t seed) const = 0;
};

std::unique_ptr<Explainer> make_explainer(ExplainerKind kind, const ExplainerContext& context);

}  // namespace tsxfidel::explainers
