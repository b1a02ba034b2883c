#pragma once

#include "mppi/harness/config.hpp"
#include "mppi/harness/verify_suite.hpp"
#include "mppi/run_task.hpp"
#include "mppi/task.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mppi {

/// One (algorithm, nu, K, seed) cell of the grid. DDP cells carry no nu or K.
struct GridCell {
  Algorithm algorithm = Algorithm::mppi;
  std::optional<double> nu;
  std::optional<Index> rollouts;
  std::uint64_t seed = 0;
};

/// Algorithms outermost, then nu, K, seed, in config order.
std::vector<GridCell> expand_grid(const ExperimentConfig& cfg);

struct RunSummary {
  std::string task;
  Algorithm algorithm = Algorithm::mppi;
  std::optional<double> nu;
  std::optional<Index> rollouts;
  std::uint64_t seed = 0;
  double average_cost = 0.0;   // time average of q(x) over executed steps
  double reported_cost = 0.0;  // average_cost, capped when the config sets a cap
  bool crashed = false;
  bool diverged = false;       // plant divergence or a captured solver failure
  bool goal_task = false;                 // completion is meaningful (quadrotor)
  std::optional<double> completion_time;  // empty means DNF on goal tasks
  std::optional<double> corner_speed;     // race car
  std::optional<bool> upright_final;      // cart-pole
  std::size_t steps = 0;
  double wall_ms_mean = 0.0;  // excluded from the deterministic outputs
  std::string error;          // solver failure message, if any
};

/// Builds the plant for a config; quadrotor forests come from forest.file or
/// are generated from forest.spacing and forest.seed.
std::unique_ptr<Task> make_task(const ExperimentConfig& cfg);
ObstacleForest make_forest(const ExperimentConfig& cfg);

/// Runs one cell. `pool` parallelises MPPI rollouts and may be null.
RunSummary run_cell(const ExperimentConfig& cfg, const Task& task, const GridCell& cell,
                    RunLog* log = nullptr, WorkerPool* pool = nullptr);

struct ExperimentResult {
  std::vector<RunSummary> summaries;  // grid order
  std::vector<RunLog> logs;           // parallel to summaries
  std::vector<VerifyCase> verify;     // fk-verify and ratio-verify tasks
  bool verification_failed() const;
};

/// Runs every cell on `workers` threads; results are in grid order and do
/// not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1);

std::string summary_csv(const std::vector<RunSummary>& summaries);
std::string summary_json(const std::vector<RunSummary>& summaries);
std::string timing_csv(const std::vector<RunSummary>& summaries);
std::string verify_csv(const std::vector<VerifyCase>& cases);
/// runs/<task>_<algorithm>[_nu<nu>_K<K>]_seed<seed>.csv
std::string run_file_name(const RunSummary& summary);

/// Writes summary.csv, summary.json, timing.csv and runs/ (or verify.csv)
/// under `out_dir`; throws IoError.
void write_outputs(const ExperimentResult& result, const std::string& out_dir);

}  // namespace mppi
