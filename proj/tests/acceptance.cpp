// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "tsxfidel/error.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/harness.hpp"
#include "tsxfidel/metrics.hpp"
#include "tsxfidel/models.hpp"

namespace tsx = tsxfidel;
namespace ex = tsxfidel::explainers;
namespace mt = tsxfidel::metrics;
namespace md = tsxfidel::models;
namespace ts = tsxfidel::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sum_of(const tsx::Matrix& m) {
  return std::accumulate(m.flat().begin(), m.flat().end(), 0.0);
}

ex::Ranking shuffled(std::size_t n, std::uint64_t seed) {
  ex::Ranking r;
  r.cells.resize(n);
  std::iota(r.cells.begin(), r.cells.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(r.cells.begin(), r.cells.end(), rng);
  return r;
}

// Dominant-driver data: the target follows the driver two steps back.
const tsx::dataset::SyntheticConfig kDriverData{
    .n_series = 2, .length = 600, .features = 4, .driver_lag = 2, .noise_std = 0.05};

// 1 ---------------------------------------------------------------------------
Outcome shapley_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_full = 0.0;
  double worst_sampled = 0.0;  // |kernel - exact| / max|phi_exact|
  std::size_t fixtures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t features = 2 + seed % 2;           // 2 or 3
    const std::size_t L = features == 2 ? 5 : 3;         // P = 10 or 9
    const auto fx = ts::synthetic_fixture(
        {.length = 300, .features = features, .driver_lag = 1 + seed % 3}, L, 1, seed);
    const auto model = md::fit_gbr(fx.data.train, {});
    const auto& x = fx.data.test[(seed * 7) % fx.data.test.size()].x;
    const std::size_t P = x.size();
    const auto exact = ex::exact_shapley(model, x, 0, fx.data.pool, 16, seed);
    const auto full = ex::explain_kernel_shap(
        model, x, 0, fx.data.pool, {.n_coalitions = std::size_t{1} << P, .n_background = 16}, seed);
    const auto sampled = ex::explain_kernel_shap(
        model, x, 0, fx.data.pool,
        {.n_coalitions = 2048, .n_background = 16, .force_sampling = true}, seed);
    double scale = 0.0;
    for (double v : exact.phi.flat()) scale = std::max(scale, std::abs(v));
    for (std::size_t c = 0; c < P; ++c) {
      worst_full = std::max(worst_full, std::abs(full.phi.at_flat(c) - exact.phi.at_flat(c)));
      if (scale > 0.0) {
        worst_sampled = std::max(
            worst_sampled, std::abs(sampled.phi.at_flat(c) - exact.phi.at_flat(c)) / scale);
      }
    }
    ++fixtures;
  }
  const double secs = seconds_since(t0);
  return {fixtures >= 20 && worst_full <= 1e-6 && worst_sampled <= 0.02 && secs < 120.0,
          fmt("%zu fixtures, full-enumeration max |diff| %.2e (<= 1e-6), 2048 sampled max "
              "|diff|/max|phi| %.2e (<= 0.02), %.1f s (< 120)",
              fixtures, worst_full, worst_sampled, secs)};
}

// 2 ---------------------------------------------------------------------------
Outcome local_accuracy() {
  const auto fx = ts::synthetic_fixture(kDriverData, 6, 2, 21);
  const auto model = md::fit_gbr(fx.data.train, {});
  const ex::ExplainerContext ctx{&fx.data.pool, {}};
  const auto shap = ex::make_explainer(ex::ExplainerKind::kKernelShap, ctx);
  double worst = 0.0;
  std::size_t windows = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& w = fx.data.test[(i * 37) % fx.data.test.size()];
    const auto imps = shap->explain(model, w.x, {}, 1000 + i);
    const auto f = model.predict(w.x);
    for (std::size_t h = 0; h < imps.size(); ++h) {
      worst = std::max(worst, std::abs(imps[h].base_value + sum_of(imps[h].phi) - f[h]));
    }
    ++windows;
  }
  return {windows == 100 && worst <= 1e-8,
          fmt("%zu windows x 2 horizons, P = %zu, max |base + sum(phi) - F| %.2e (<= 1e-8)",
              windows, fx.data.test[0].x.size(), worst)};
}

// 3 ---------------------------------------------------------------------------
Outcome linear_closed_forms() {
  double worst_omission = 0.0;
  double worst_aopcr = 0.0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t J = 2 + seed % 3, L = 3 + seed % 4, P = J * L;
    const auto wm = ts::random_matrix(1, P, seed, -2.0, 2.0);
    const std::vector<double> w(wm.flat().begin(), wm.flat().end());
    const ts::LinearModel model(J, L, {w}, {0.3});
    const auto x = ts::random_matrix(J, L, 500 + seed);
    const auto gm = ts::random_matrix(1, J, 900 + seed);
    const std::vector<double> global(gm.flat().begin(), gm.flat().end());

    const auto local = ex::explain_omission(model, x, 0, ex::ReplacementKind::kLocalMean);
    const auto glob = ex::explain_omission(model, x, 0, ex::ReplacementKind::kGlobalMean, global);
    for (std::size_t j = 0; j < J; ++j) {
      const double mu = ex::local_mean(x, j);
      for (std::size_t l = 0; l < L; ++l) {
        const double wc = w[j * L + l];
        worst_omission = std::max(worst_omission, std::abs(local.phi(j, l) - wc * (x(j, l) - mu)));
        worst_omission =
            std::max(worst_omission, std::abs(glob.phi(j, l) - wc * (x(j, l) - global[j])));
      }
    }

    // Singleton pools make every ablation deterministic, so the expectation
    // (1/K) sum_k sum_{i<=k} w_i (x_i - c_i) is the exact score.
    const auto cm = ts::random_matrix(1, J, 1300 + seed);
    const std::vector<double> c(cm.flat().begin(), cm.flat().end());
    const auto pool = ts::singleton_pool(c);
    const auto r = shuffled(P, seed);
    for (std::size_t K = 1; K <= P; ++K) {
      double closed = 0.0;
      for (std::size_t k = 1; k <= K; ++k) {
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t cell = r.cells[i];
          closed += w[cell] * (x.at_flat(cell) - c[cell / L]);
        }
      }
      closed /= static_cast<double>(K);
      const auto est = mt::aopcr_tau(model, x, r, 0, K, pool, {}, seed);
      const double scale = std::max(1.0, std::abs(closed));
      worst_aopcr = std::max(worst_aopcr, std::abs(est.mean - closed) / scale);
      if (est.margin_of_error != 0.0) worst_aopcr = 1.0;
    }
  }
  return {worst_omission <= 1e-12 && worst_aopcr <= 1e-12,
          fmt("25 random linear models: omission max |phi - w(x - mu)| %.2e, AOPCR max "
              "relative error %.2e (both <= 1e-12)",
              worst_omission, worst_aopcr)};
}

// Shared fitted-GBR fixture for criteria 4 and 5.
struct GbrFixture {
  ts::SyntheticFixture data;
  md::GbrModel model;
  std::vector<tsx::dataset::WindowInstance> windows;
};

const GbrFixture& gbr_fixture() {
  static const GbrFixture f = [] {
    auto data = ts::synthetic_fixture(kDriverData, 6, 2, 5);
    auto model = md::fit_gbr(data.data.train, {});
    auto windows = tsx::harness::select_windows(data.data.test, 60);
    return GbrFixture{std::move(data), std::move(model), std::move(windows)};
  }();
  return f;
}

mt::DatasetEvaluation evaluate(const GbrFixture& f, ex::ExplainerKind kind, bool apt) {
  const ex::ExplainerContext ctx{&f.data.data.pool, {}};
  const auto explainer = ex::make_explainer(kind, ctx);
  mt::MetricConfig cfg;  // K = 10, |alpha| = 0.1, gamma = 1, default stopping rule
  cfg.apt = apt;
  return mt::evaluate_dataset(f.model, *explainer, f.windows, cfg,
                              {&f.data.data.pool, &f.data.data.global_means, 2024});
}

// 4 ---------------------------------------------------------------------------
Outcome random_nullity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& f = gbr_fixture();
  const auto eval = evaluate(f, ex::ExplainerKind::kRandom, false);
  const double secs = seconds_since(t0);
  bool ok = f.windows.size() >= 50 && secs < 300.0;
  std::string detail = fmt("%zu windows;", f.windows.size());
  for (const auto& s : eval.scores) {
    const bool within = std::abs(s.total) <= 3.0 * s.total_margin;
    ok = ok && within && s.windows >= 50;
    detail += fmt(" %s total %.2e, 3*moe %.2e;", std::string(ex::to_string(s.direction)).c_str(),
                  s.total, 3.0 * s.total_margin);
  }
  return {ok, detail + fmt(" %.1f s (< 300)", secs)};
}

// 5 ---------------------------------------------------------------------------
Outcome informativeness() {
  const auto& f = gbr_fixture();
  const auto rnd = evaluate(f, ex::ExplainerKind::kRandom, true);
  const auto shap = evaluate(f, ex::ExplainerKind::kKernelShap, true);
  const auto omi = evaluate(f, ex::ExplainerKind::kOmissionGlobal, true);
  // scores: AOPCR+, AOPCR-, APT+, APT-
  const auto& r = rnd.scores;
  const bool shap_aopcr = shap.scores[0].total - r[0].total >
                          shap.scores[0].total_margin + r[0].total_margin;
  const bool omi_aopcr =
      omi.scores[0].total - r[0].total > omi.scores[0].total_margin + r[0].total_margin;
  const bool shap_apt = shap.scores[2].total < r[2].total;
  return {shap_aopcr && omi_aopcr && shap_apt,
          fmt("AOPCR+ shap %.4f, omission-global %.4f, random %.4f (moe %.4f/%.4f/%.4f); "
              "APT+ shap %.4f vs random %.4f",
              shap.scores[0].total, omi.scores[0].total, r[0].total, shap.scores[0].total_margin,
              omi.scores[0].total_margin, r[0].total_margin, shap.scores[2].total, r[2].total)};
}

// 6 ---------------------------------------------------------------------------
Outcome mc_stopping() {
  const mt::MCConfig cfg;  // threshold 0.0005, z 1.96, min_n 30, max_n 10000
  bool ok = true;
  std::string detail;
  std::size_t cases = 0;
  for (double sd : {0.0, 0.001, 0.005, 0.01, 0.02, 0.05}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      std::mt19937_64 rng(seed * 1000 + static_cast<std::uint64_t>(sd * 1e4));
      std::normal_distribution<double> g(0.25, sd > 0.0 ? sd : 1.0);
      std::vector<double> draws(cfg.max_n);
      for (double& d : draws) d = sd > 0.0 ? g(rng) : 0.25;
      const auto e = mt::mc_run([&](std::size_t i) { return draws[i]; }, cfg);
      const auto ref = ts::mc_reference(draws, cfg);
      const bool match = e.n_samples == ref.stop_n && e.converged == ref.converged &&
                         std::abs(e.margin_of_error - ref.margin) <= 1e-12 &&
                         e.n_samples >= cfg.min_n;
      ok = ok && match;
      ++cases;
      if (seed == 0) detail += fmt(" sd %.3g stops at %zu;", sd, e.n_samples);
    }
  }
  return {ok, fmt("%zu samplers match the reference trace;", cases) + detail};
}

// 7 ---------------------------------------------------------------------------
Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t J = 1 + seed % 3, L = 2 + seed % 3, H = 1 + seed % 2;
    const std::vector<std::size_t> hidden = {3 + seed % 4, 2 + seed % 3};
    const auto net = md::TdnnModel::initialized(J, L, H, hidden, 1.0, seed);
    const auto inputs = ts::random_matrix(3, J * L, 100 + seed);
    const auto targets = ts::random_matrix(3, H, 200 + seed, 0.0, 1.0);
    const auto analytic = net.mse_gradient(inputs, targets);
    const auto numeric = ts::finite_difference_gradient(net, inputs, targets, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("10 random nets, max relative error %.2e (< 1e-4), %.2f s (< 30)", worst, secs)};
}

// 8 ---------------------------------------------------------------------------
Outcome gbr_monotone() {
  const auto fx = ts::synthetic_fixture(kDriverData, 6, 3, 8);
  md::GbrTrace trace;
  md::fit_gbr(fx.data.train, {.learning_rate = 0.01, .n_trees = 100, .max_depth = 3}, &trace);
  bool ok = trace.size() == 3;
  std::size_t rounds = 0;
  for (const auto& mse : trace) {
    ok = ok && mse.size() == 101;
    for (std::size_t i = 1; i < mse.size(); ++i) {
      ok = ok && mse[i] <= mse[i - 1];
      ++rounds;
    }
  }
  return {ok, fmt("%zu horizons, %zu boosting steps checked, MSE %.5f -> %.5f on horizon 1",
                  trace.size(), rounds, trace.at(0).front(), trace.at(0).back())};
}

// 9 ---------------------------------------------------------------------------
Outcome model_sanity() {
  const auto fx = ts::synthetic_fixture(kDriverData, 6, 2, 9);
  const auto gbr = md::fit_gbr(fx.data.train, {});
  const auto intercept = md::fit_gbr(fx.data.train, {.n_trees = 0});
  const auto untrained = md::fit_tdnn(fx.data.train, {.epochs = 0, .seed = 9});
  const auto g = md::evaluate_performance(gbr, fx.data.test);
  const auto i = md::evaluate_performance(intercept, fx.data.test);
  const auto t = md::evaluate_performance(untrained, fx.data.test);
  return {g.nrmse < i.nrmse && g.nd < i.nd && g.nrmse < t.nrmse && g.nd < t.nd,
          fmt("test NRMSE/ND: gbr %.4f/%.4f, intercept %.4f/%.4f, untrained tdnn %.4f/%.4f",
              g.nrmse, g.nd, i.nrmse, i.nd, t.nrmse, t.nd)};
}

// 10 --------------------------------------------------------------------------
Outcome apt_domain() {
  const auto& f = gbr_fixture();
  const std::size_t P = f.windows.front().x.size();
  std::size_t samples = 0, crossed = 0, off_grid = 0, bad_never = 0;
  for (std::size_t wi = 0; wi < f.windows.size(); ++wi) {
    const auto& w = f.windows[wi];
    for (std::size_t h = 0; h < 2; ++h) {
      for (double alpha : {-0.1, 0.1, -0.02, 0.02}) {
        for (std::uint64_t s = 0; s < 10; ++s) {
          const auto a = mt::apt_sample(f.model, w.x, shuffled(P, wi * 31 + s), h, alpha,
                                        f.data.data.pool, wi * 1000 + s);
          const double k = a.value * static_cast<double>(P);
          if (std::abs(k - std::round(k)) > 1e-9 || k < 1.0 || k > static_cast<double>(P)) {
            ++off_grid;
          }
          if (!a.crossed && a.value != 1.0) ++bad_never;
          crossed += a.crossed;
          ++samples;
        }
      }
    }
  }
  // A model that ignores its inputs never crosses; the window scores 1.0.
  const ts::ConstantModel flat(f.windows.front().x.rows(), f.windows.front().x.cols(), 2, 0.5);
  const auto never = mt::apt_tau(flat, f.windows.front().x, shuffled(P, 1), 0, -0.1,
                                 f.data.data.pool, {}, 3);
  const bool never_ok = never.estimate.mean == 1.0 &&
                        never.never_crossed == never.estimate.n_samples;
  return {off_grid == 0 && bad_never == 0 && never_ok && crossed > 0 && crossed < samples,
          fmt("%zu samples (%zu crossed), %zu off the {1/%zu..1} grid, never-crossed window "
              "score %.1f",
              samples, crossed, off_grid, P, never.estimate.mean)};
}

// 11 --------------------------------------------------------------------------
Outcome determinism() {
  namespace hx = tsx::harness;
  const std::string text = R"({
    "name": "determinism",
    "seed": 99,
    "data": {"synthetic": {"n_series": 2, "length": 300, "features": 2}, "time_covariates": false},
    "window": {"length": 4, "horizons": 2},
    "models": {"gbr": {"n_trees": 30}, "tdnn": {"epochs": 3, "hidden": [8, 8]}},
    "explainers": ["random", "omission-local", "omission-global", "kernel-shap"],
    "kernel_shap": {"n_background": 4},
    "metrics": {"aopcr": {"k": 4}, "monte_carlo": {"threshold": 0.005, "max_n": 500}},
    "evaluation": {"max_windows": 12, "importance_windows": 2}
  })";
  const auto cfg = hx::validate_config(text);
  const auto a = hx::run(cfg, {.jobs = 1});
  const auto b = hx::run(cfg, {.jobs = 1});
  const auto c = hx::run(cfg, {.jobs = 4});
  const auto root = ts::temp_dir("acceptance-determinism");
  const auto files_a = hx::emit(a, root / "a");
  const auto files_b = hx::emit(b, root / "b");
  bool identical = files_a.size() == 4 && files_b.size() == 4;
  for (std::size_t i = 0; identical && i < files_a.size(); ++i) {
    identical = ts::read_text(files_a[i]) == ts::read_text(files_b[i]);
  }
  bool jobs_same = a.scores.size() == c.scores.size();
  for (std::size_t i = 0; jobs_same && i < a.scores.size(); ++i) {
    jobs_same = a.scores[i].score.total == c.scores[i].score.total &&
                a.scores[i].score.total_margin == c.scores[i].score.total_margin;
  }
  jobs_same = jobs_same && hx::report_json(a) == hx::report_json(c);
  return {identical && jobs_same,
          fmt("%zu report files byte-identical across reruns: %s; %zu score rows identical for "
              "jobs 1 vs 4: %s",
              files_a.size(), identical ? "yes" : "no", a.scores.size(),
              jobs_same ? "yes" : "no")};
}

// 12 --------------------------------------------------------------------------
Outcome gamma_reduction() {
  bool ok = true;
  // Hand-computed fixtures.
  ok = ok && mt::aopcr_total(std::vector<double>{3, 2, 1}, 0.5) == (3.0 + 1.0 + 0.25) / 3.0;
  ok = ok && mt::apt_total(std::vector<double>{0.8, 0.4, 0.2, 0.1}, 0.5) ==
                 (0.8 + 0.2 + 0.05 + 0.0125) / 4.0;
  ok = ok && std::abs(mt::apt_total(std::vector<double>{0.2, 0.4}, 0.9) - 0.28) <= 1e-15;
  // gamma = 1 against plain averages of evaluated per-horizon means.
  const auto fx = ts::synthetic_fixture({.length = 300, .features = 2}, 3, 4, 12);
  const auto model = md::fit_gbr(fx.data.train, {.n_trees = 20});
  const auto explainer = ex::make_explainer(ex::ExplainerKind::kOmissionLocal, {});
  mt::MetricConfig cfg;
  cfg.k = 3;
  cfg.mc = {.threshold = 0.01, .max_n = 200};
  const std::span<const tsx::dataset::WindowInstance> windows(fx.data.test.data(), 8);
  const mt::EvaluationContext ctx{&fx.data.pool, nullptr, 4};
  const auto one = mt::evaluate_dataset(model, *explainer, windows, cfg, ctx);
  cfg.gamma = 0.5;
  const auto half = mt::evaluate_dataset(model, *explainer, windows, cfg, ctx);
  std::size_t checked = 0;
  for (std::size_t s = 0; s < one.scores.size(); ++s) {
    double plain = 0.0, discounted = 0.0, w = 1.0;
    for (std::size_t h = 0; h < 4; ++h) {
      plain += one.scores[s].per_horizon[h].mean;
      discounted += w * half.scores[s].per_horizon[h].mean;
      w *= 0.5;
    }
    ok = ok && one.scores[s].total == plain / 4.0 && half.scores[s].total == discounted / 4.0;
    ++checked;
  }
  return {ok, fmt("hand fixtures [3,2,1] -> 1.41667, [0.2,0.4]@0.9 -> 0.28; %zu dataset scores "
                  "equal the plain mean at gamma=1 and the discounted sum at gamma=0.5",
                  checked)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "Shapley oracle equivalence", shapley_oracle},
      {2, "KernelSHAP local accuracy", local_accuracy},
      {3, "Linear-model closed forms", linear_closed_forms},
      {4, "Random-baseline nullity", random_nullity},
      {5, "Informativeness ordering", informativeness},
      {6, "Monte-Carlo stopping", mc_stopping},
      {7, "TDNN gradient correctness", gradient_check},
      {8, "GBR training MSE non-increasing", gbr_monotone},
      {9, "Model performance sanity", model_sanity},
      {10, "APT domain", apt_domain},
      {11, "Determinism", determinism},
      {12, "Gamma reduction", gamma_reduction},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2d  %-34s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
