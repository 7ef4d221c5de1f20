#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsid/config.hpp"
#include "sparsid/diagnostics.hpp"
#include "sparsid/harness.hpp"

namespace {

using namespace sparsid;

int cmd_run(const std::string& config_path, const std::string& output_path,
            const std::vector<std::string>& overrides, unsigned threads, bool verbose) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  if (verbose)
    std::cerr << "running " << cfg.algorithms.size() << " algorithm(s) x "
              << cfg.realizations << " realization(s), " << cfg.iterations
              << " iterations\n";
  const std::vector<MisalignmentCurve> curves = run_ensemble(cfg, threads);
  export_csv(curves, output_path);
  for (const MisalignmentCurve& c : curves) {
    const auto reach = iterations_to_reach(c, -20.0);
    char reach_text[32];
    if (reach)
      std::snprintf(reach_text, sizeof(reach_text), "%" PRIu64, *reach);
    else
      std::snprintf(reach_text, sizeof(reach_text), "never");
    std::printf("algorithm=%s final_misalignment_db=%.6g iterations_to_minus20db=%s\n",
                c.algorithm.c_str(), c.values_db.back(), reach_text);
  }
  return 0;
}

int cmd_gen_channel(std::size_t taps, std::size_t active, double decay,
                    std::uint64_t seed, const std::string& output_path) {
  if (taps == 0) throw ConfigError("--taps must be positive");
  if (active == 0 || active > taps)
    throw ConfigError("--active must lie in [1, --taps]");
  if (!(decay >= 0.0) || !std::isfinite(decay))
    throw ConfigError("--decay must be non-negative");
  const ImpulseResponse h = synth_sparse_channel(taps, active, decay, seed);
  save_impulse_response(h, output_path);
  std::printf("wrote %zu taps (%zu active) to %s\n", taps, active, output_path.c_str());
  return 0;
}

int cmd_diagnose(const std::string& config_path, const std::string& output_path,
                 std::size_t window, std::uint64_t samples,
                 const std::vector<std::string>& overrides) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  const ProxyDiagnosticResult pd = proxy_diagnostic(cfg, window);
  const NecessaryConditionReport nc = sample_necessary_condition(samples, cfg.seed_base);

  std::ofstream out(output_path);
  if (!out) throw OutputError("cannot write '" + output_path + "'");
  out << "start_iteration,cosine,misalignment_start_db,transient,skipped\n";
  char buf[96];
  for (const ProxyCheckpoint& cp : pd.checkpoints) {
    std::snprintf(buf, sizeof(buf), "%" PRIu64 ",%.17g,%.17g,%d,%d", cp.start_iteration,
                  cp.cosine, cp.misalignment_start_db, cp.transient ? 1 : 0,
                  cp.skipped ? 1 : 0);
    out << buf << '\n';
  }
  out.flush();
  if (!out) throw OutputError("write failed for '" + output_path + "'");

  std::printf("monotone-error bound check: %" PRIu64 " violations / %" PRIu64
              " eligible of %" PRIu64 " samples: %s\n",
              nc.violations, nc.eligible, nc.samples, nc.violations == 0 ? "PASS" : "FAIL");
  if (std::isnan(pd.median_transient_cosine))
    std::printf("proxy check: %zu checkpoints, %zu transient, %zu skipped, "
                "median transient cosine n/a\n",
                pd.checkpoints.size(), pd.transient_count, pd.skipped_count);
  else
    std::printf("proxy check: %zu checkpoints, %zu transient, %zu skipped, "
                "median transient cosine %.6g\n",
                pd.checkpoints.size(), pd.transient_count, pd.skipped_count,
                pd.median_transient_cosine);
  return nc.violations == 0 ? 0 : 2;
}

int cmd_validate(const std::string& config_path, const std::vector<std::string>& overrides) {
  const ExperimentConfig cfg = load_config(config_path, overrides);
  std::printf("config OK: %zu algorithm(s), %" PRIu64 " realization(s), %" PRIu64
              " iterations\n",
              cfg.algorithms.size(), cfg.realizations, cfg.iterations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-impulse-response system identification benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  bool verbose = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment and export misalignment CSV");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--output", output_path, "output CSV path")->required();
  run->add_option("--override", overrides, "config override key.path=value (repeatable)");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_flag("-v,--verbose", verbose, "progress chatter on stderr");

  std::size_t taps = 0;
  std::size_t active = 0;
  double decay = 0.0;
  std::uint64_t seed = 0;
  CLI::App* gen = app.add_subcommand("gen-channel", "synthesize a sparse impulse response");
  gen->add_option("--taps", taps, "response length")->required();
  gen->add_option("--active", active, "number of nonzero taps")->required();
  gen->add_option("--decay", decay, "exponential amplitude decay per tap");
  gen->add_option("--seed", seed, "placement seed");
  gen->add_option("--output", output_path, "output file")->required();

  std::size_t window = 0;
  std::uint64_t samples = 1000000;
  CLI::App* diag = app.add_subcommand("diagnose", "movement-proxy and step-bound checks");
  diag->add_option("--config", config_path, "experiment config (JSON)")->required();
  diag->add_option("--output", output_path, "checkpoint CSV path")->required();
  diag->add_option("--window", window, "proxy window (default: filter length)");
  diag->add_option("--samples", samples, "bound-check sample count");
  diag->add_option("--override", overrides, "config override key.path=value (repeatable)");

  CLI::App* val = app.add_subcommand("validate-config", "parse and validate a config");
  val->add_option("--config", config_path, "experiment config (JSON)")->required();
  val->add_option("--override", overrides, "config override key.path=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, output_path, overrides, threads, verbose);
    if (gen->parsed()) return cmd_gen_channel(taps, active, decay, seed, output_path);
    if (diag->parsed()) return cmd_diagnose(config_path, output_path, window, samples, overrides);
    if (val->parsed()) return cmd_validate(config_path, overrides);
  } catch (const sparsid::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const sparsid::OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
