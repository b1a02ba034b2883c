#include "mppi/env/forest.hpp"
#include "mppi/harness/config.hpp"
#include "mppi/harness/csv.hpp"
#include "mppi/harness/experiment.hpp"
#include "mppi/harness/verify_suite.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

namespace {

enum Exit { ok = 0, verification_failed = 1, usage = 2, io = 3 };

int run_command(const std::string& config_path, const std::string& out_override,
                std::size_t workers) {
  mppi::ExperimentConfig cfg = mppi::experiment_config(mppi::read_key_values(config_path));
  if (!out_override.empty()) cfg.out_dir = out_override;
  const mppi::ExperimentResult result = mppi::run_experiment(cfg, workers);
  mppi::write_outputs(result, cfg.out_dir);

  for (const mppi::VerifyCase& c : result.verify)
    std::printf("%s %s max_error=%.3e tolerance=%.3e %s\n", c.passed ? "PASS" : "FAIL",
                c.name.c_str(), c.max_error, c.tolerance, c.detail.c_str());
  for (const mppi::RunSummary& s : result.summaries) {
    std::printf("%s %s", s.task.c_str(), mppi::to_string(s.algorithm).c_str());
    if (s.nu) std::printf(" nu=%g", *s.nu);
    if (s.rollouts) std::printf(" K=%lld", static_cast<long long>(*s.rollouts));
    std::printf(" seed=%llu cost=%.4g", static_cast<unsigned long long>(s.seed), s.reported_cost);
    if (s.completion_time) std::printf(" time=%.2f", *s.completion_time);
    if (s.crashed) std::printf(" crashed");
    if (s.diverged) std::printf(" diverged");
    std::printf("\n");
  }
  std::printf("wrote %s\n", cfg.out_dir.c_str());
  return result.verification_failed() ? verification_failed : ok;
}

int verify_command(const std::string& suite) {
  const auto cases = mppi::run_verify_suite(suite, std::cout);
  for (const mppi::VerifyCase& c : cases)
    if (!c.passed) return verification_failed;
  return ok;
}

int forest_command(double spacing, std::uint64_t seed, const std::string& out, double width,
                   double height) {
  mppi::ForestBounds bounds;
  bounds.x_max = width;
  bounds.y_max = height;
  mppi::ForestOptions options;
  options.start_y = height / 2.0;
  options.goal_x = width;
  options.goal_y = height / 2.0;
  mppi::ObstacleForest forest;
  try {
    forest = mppi::generate_forest(spacing, bounds, seed, options);
  } catch (const std::invalid_argument& e) {
    throw mppi::UsageError(e.what());
  }
  mppi::write_text_file(out, forest.to_json() + "\n");
  std::printf("%zu cylinders -> %s\n", forest.size(), out.c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPPI control experiments, verification suites and forest generation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t workers = 1;
  CLI::App* run = app.add_subcommand("run", "Run an experiment grid from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  std::string suite = "all";
  CLI::App* verify = app.add_subcommand("verify", "Run an oracle verification suite");
  verify->add_option("--suite", suite, "ratio, fk, lq or all")
      ->check(CLI::IsMember({"ratio", "fk", "lq", "all"}));

  double spacing = 4.0;
  std::uint64_t forest_seed = 1;
  std::string forest_out;
  double width = 20.0;
  double height = 20.0;
  CLI::App* forest = app.add_subcommand("forest", "Generate an obstacle forest as JSON");
  forest->add_option("--spacing", spacing, "mean obstacle spacing, m")->required();
  forest->add_option("--seed", forest_seed, "generator seed")->required();
  forest->add_option("--out", forest_out, "output JSON path")->required();
  forest->add_option("--width", width, "forest extent in x, m");
  forest->add_option("--height", height, "forest extent in y, m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*run) return run_command(config_path, out_dir, workers);
    if (*verify) return verify_command(suite);
    if (*forest) return forest_command(spacing, forest_seed, forest_out, width, height);
  } catch (const mppi::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return verification_failed;
  }
  return usage;
}
