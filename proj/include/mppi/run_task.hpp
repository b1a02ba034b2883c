#pragma once

#include "mppi/controller.hpp"
#include "mppi/task.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mppi {

struct RunOptions {
  double duration = 10.0;      // seconds
  double control_rate = 50.0;  // Hz; one executed control per plant step
  bool plant_noise = true;     // natural diffusion B_c eps sqrt(dt) on the plant
  std::uint64_t plant_seed = 0;
  bool stop_on_completion = true;
  bool stop_on_crash = false;  // otherwise a crashed plant stays frozen until the end
  /// End the run and record the message instead of propagating controller exceptions.
  bool capture_controller_errors = false;
};

/// Closed-loop record. Row i holds the state x_i before executing u_i and the
/// instantaneous state cost q(x_i).
struct RunLog {
  std::string task;
  std::string controller;
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;

  std::vector<double> time;
  std::vector<Vector> states;  // reported coordinates
  std::vector<Vector> controls;
  std::vector<double> running_cost;
  std::vector<double> wall_ms;  // optimisation wall-clock per step

  Vector final_state;  // reported coordinates after the last step
  bool diverged = false;
  bool crashed = false;
  std::optional<double> completion_time;
  std::string controller_error;  // set when a captured controller exception ended the run

  std::size_t steps() const { return time.size(); }
  /// Mean of running_cost over executed steps.
  double average_cost() const;
  double mean_wall_ms() const;
};

/// Simulates the plant under `controller` for options.duration seconds.
///
/// The run ends early on divergence (flagged) and, if requested, on task
/// completion. A crash freezes the plant for the rest of the run.
RunLog run_task(const Task& task, MpcController& controller, const RunOptions& options);

}  // namespace mppi
