// tsxfidel: fidelity evaluation of time-series forecast explanations.
//
//   tsxfidel run --config exp.json [--out DIR] [--seed N] [--jobs N]
//   tsxfidel validate --config exp.json
//
// Exit status: 0 success, 1 invalid configuration or arguments, 2 runtime failure.

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsxfidel/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::optional<std::uint64_t> parse_seed(std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return v;
}

void print_diagnostics(const tsxfidel::harness::ConfigError& e) {
  std::cerr << "tsxfidel: invalid config\n";
  for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace hx = tsxfidel::harness;

  CLI::App app{"Local-fidelity evaluation of time-series forecast explanations"};
  app.set_version_flag("--version", std::string(hx::tool_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;

  auto* run_cmd = app.add_subcommand("run", "Run the experiment and write report files");
  run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run_cmd->add_option("--seed", seed, "Master seed (overrides TSXFIDEL_SEED and the config)");
  run_cmd->add_option("--jobs", jobs, "Worker threads for window evaluation")
      ->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a config and print it resolved");
  validate_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  hx::ExperimentConfig config;
  try {
    config = hx::load_config(config_path);
  } catch (const hx::ConfigError& e) {
    print_diagnostics(e);
    return kInvalid;
  }

  if (const char* env = std::getenv("TSXFIDEL_SEED"); env != nullptr && *env != '\0') {
    const auto v = parse_seed(env);
    if (!v) {
      std::cerr << "tsxfidel: TSXFIDEL_SEED is not a non-negative integer: " << env << "\n";
      return kInvalid;
    }
    config.seed = *v;
  }
  if (seed) config.seed = *seed;

  if (validate_cmd->parsed()) {
    std::cout << config.echo() << "\n";
    if (!config.defaulted.empty()) {
      std::cout << "# defaulted:";
      for (const auto& d : config.defaulted) std::cout << " " << d;
      std::cout << "\n";
    }
    return kOk;
  }

  try {
    const auto report = hx::run(config, {jobs});
    const std::filesystem::path dest = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
    for (const auto& path : hx::emit(report, dest)) std::cout << path.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "tsxfidel: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
