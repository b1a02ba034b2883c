#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/env/cartpole.hpp"
#include "mppi/env/forest.hpp"
#include "mppi/env/quadrotor.hpp"
#include "mppi/env/racecar.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mppi {

/// Malformed command line or configuration (CLI exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable input or unwritable output (CLI exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines in file order. '#' starts a comment; blank lines are
/// skipped; duplicate keys are an error.
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> lines;  // source line of each entry

  const std::string* find(const std::string& key) const;
};

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

enum class TaskKind { cartpole, racecar, quadrotor, fk_verify, ratio_verify };
enum class Algorithm { mppi, ddp };

std::string to_string(TaskKind task);
std::string to_string(Algorithm algorithm);

struct ExperimentConfig {
  TaskKind task = TaskKind::cartpole;
  std::vector<Algorithm> algorithms{Algorithm::mppi};
  std::vector<double> nus{1500.0};
  std::vector<Index> rollouts{1000};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  double duration = 10.0;     // s
  double horizon = 1.0;       // s
  double control_rate = 50.0; // Hz
  bool plant_noise = true;
  std::string out_dir = "out";

  std::optional<double> cost_cap;  // reported_cost = min(average_cost, cap)
  double upright_window = 5.0;     // cart-pole: trailing seconds checked for upright
  double corner_threshold = 10.0;  // race car: |x| beyond which a state is in a corner

  // MPPI
  double lambda = 10.0;
  double control_cost = 1.0;  // R = r I
  std::optional<double> u_init;  // scalar fill; empty means zero
  double penalty_cost = 1e6;
  int iterations = 1;
  bool strict_lambda = false;

  // DDP; ddp_control_cost empty means the MPPI value
  std::optional<double> ddp_control_cost;
  std::optional<double> u_ref;  // scalar fill; empty means u_init
  int ddp_max_iterations = 3;
  double mu_init = 1e-6;
  double mu_min = 1e-6;
  double mu_max = 1e10;
  double mu_growth = 10.0;
  double ddp_tolerance = 1e-7;
  double proximity = 10.0;  // m, DDP obstacle sum radius

  CartPoleParams cartpole;
  RaceCarParams racecar;
  QuadrotorParams quadrotor;
  QuadrotorCourse course;

  double forest_spacing = 4.0;
  std::uint64_t forest_seed = 1;
  ForestBounds forest_bounds;
  ForestOptions forest_options;
  std::string forest_file;  // overrides generation when set

  Index horizon_steps() const;
  double dt() const { return 1.0 / control_rate; }
  /// Throws UsageError when an invariant fails.
  void validate() const;
};

/// Defaults tuned per task (lambda, R, duration, u_init, cost cap).
ExperimentConfig default_config(TaskKind task);

/// Builds a validated config; `task` is required, unknown keys or bad values
/// throw UsageError naming the line.
ExperimentConfig experiment_config(const KeyValues& kv);

/// Names of every accepted key, sorted.
std::vector<std::string> config_keys();

}  // namespace mppi
