#pragma once

#include "mppi/ddp/ddp.hpp"
#include "mppi/env/quadrotor.hpp"
#include "mppi/task.hpp"

#include <memory>

namespace mppi {

/// A task's own state cost, for plants whose cost is already smooth.
class TaskStateCost : public DdpCost {
 public:
  explicit TaskStateCost(const Task& task, std::vector<Index> active = {});
  double state_cost(const Vector& x) const override { return task_->running_cost(x, false); }
  double terminal_cost(const Vector& x) const override { return task_->terminal_cost(x); }
  std::vector<Index> active_indices() const override { return active_; }

 private:
  const Task* task_;
  std::vector<Index> active_;
};

/// Quadrotor cost with the crash indicator and the nearest-obstacle term
/// replaced by 2000 sum_i exp(-d_i^2 / 2) over cylinders within `proximity`.
class QuadrotorDdpCost : public DdpCost {
 public:
  explicit QuadrotorDdpCost(const QuadrotorTask& task, double proximity = 10.0);
  double state_cost(const Vector& x) const override;
  std::vector<Index> active_indices() const override { return {0, 1, 2, 3, 4, 5, 8}; }

 private:
  const QuadrotorTask* task_;
  double proximity_;
};

/// Smooth DDP cost for a shipped task: cart-pole and race car are passed
/// through unchanged, the quadrotor gets QuadrotorDdpCost.
std::unique_ptr<DdpCost> smooth_cost_adapter(const Task& task, double proximity = 10.0);

}  // namespace mppi
