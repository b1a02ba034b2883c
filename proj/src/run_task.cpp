#include "mppi/run_task.hpp"

#include "mppi/noise.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mppi {

double RunLog::average_cost() const {
  if (running_cost.empty()) return 0.0;
  return std::accumulate(running_cost.begin(), running_cost.end(), 0.0) /
         static_cast<double>(running_cost.size());
}

double RunLog::mean_wall_ms() const {
  if (wall_ms.empty()) return 0.0;
  return std::accumulate(wall_ms.begin(), wall_ms.end(), 0.0) / static_cast<double>(wall_ms.size());
}

RunLog run_task(const Task& task, MpcController& controller, const RunOptions& options) {
  if (!(options.control_rate > 0.0) || !(options.duration > 0.0))
    throw std::invalid_argument("run_task: duration and control rate must be positive");
  const double dt = 1.0 / options.control_rate;
  if (std::abs(controller.plan().dt() - dt) > 1e-12)
    throw std::invalid_argument("run_task: controller dt must equal 1 / control_rate");

  const DiffusionModel& model = task.model();
  const Partition d = model.partition();
  const auto steps = static_cast<std::size_t>(std::llround(options.duration * options.control_rate));
  const NoiseStream plant_noise(derive_seed(options.plant_seed, 0x706c616e74ULL), d.p);

  RunLog log;
  log.task = task.name();
  log.controller = controller.name();
  log.state_names = task.state_names();
  log.control_names = task.control_names();
  log.time.reserve(steps);

  EulerStepper stepper(model);
  Vector x = task.initial_state();
  Vector eps(d.p);
  const Vector lo = task.control_lower();
  const Vector hi = task.control_upper();
  bool crashed = task.crash_check(x);

  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    if (options.stop_on_completion && !crashed && task.completed(x)) {
      log.completion_time = t;
      break;
    }

    const auto start = std::chrono::steady_clock::now();
    Vector u;
    try {
      u = controller.step(x).cwiseMax(lo).cwiseMin(hi);
    } catch (const std::exception& e) {
      if (!options.capture_controller_errors) throw;
      log.controller_error = e.what();
      break;
    }
    const auto stop = std::chrono::steady_clock::now();

    log.time.push_back(t);
    log.states.push_back(task.report_state(x));
    log.controls.push_back(u);
    log.running_cost.push_back(task.running_cost(x, crashed));
    log.wall_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());

    if (crashed) continue;
    plant_noise.draw(0, s, std::span<double>(eps.data(), static_cast<std::size_t>(eps.size())));
    const Vector previous = x;
    stepper.step(x, u, options.plant_noise ? &eps : nullptr, t, dt);
    if (!x.allFinite()) {
      log.diverged = true;
      x = previous;
      break;
    }
    crashed = task.crash_check(x);
    if (crashed && options.stop_on_crash) break;
  }
  if (!log.completion_time && options.stop_on_completion && !log.diverged && !crashed &&
      log.controller_error.empty() && log.steps() == steps && task.completed(x))
    log.completion_time = static_cast<double>(steps) * dt;

  log.crashed = crashed;
  log.final_state = task.report_state(x);
  return log;
}

}  // namespace mppi
