#include "mppi/ddp/smooth_cost.hpp"

#include "mppi/env/cartpole.hpp"
#include "mppi/env/racecar.hpp"

#include <cmath>
#include <stdexcept>

namespace mppi {

TaskStateCost::TaskStateCost(const Task& task, std::vector<Index> active)
    : task_(&task), active_(std::move(active)) {}

QuadrotorDdpCost::QuadrotorDdpCost(const QuadrotorTask& task, double proximity)
    : task_(&task), proximity_(proximity) {}

double QuadrotorDdpCost::state_cost(const Vector& x) const {
  const QuadrotorCourse& c = task_->course();
  const double ex = x[0] - c.goal_x;
  const double ey = x[1] - c.goal_y;
  const double ez = x[2] - c.altitude;
  const double speed_sq = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
  return 2.5 * ex * ex + 2.5 * ey * ey + 150.0 * ez * ez + 50.0 * x[8] * x[8] + speed_sq +
         ddp_obstacle_cost(x[0], x[1], task_->forest(), proximity_);
}

std::unique_ptr<DdpCost> smooth_cost_adapter(const Task& task, double proximity) {
  if (const auto* quad = dynamic_cast<const QuadrotorTask*>(&task))
    return std::make_unique<QuadrotorDdpCost>(*quad, proximity);
  if (dynamic_cast<const RaceCarTask*>(&task) != nullptr)
    return std::make_unique<TaskStateCost>(task, std::vector<Index>{0, 1, 3});
  if (dynamic_cast<const CartPoleTask*>(&task) != nullptr)
    return std::make_unique<TaskStateCost>(task);
  throw std::invalid_argument("smooth_cost_adapter: no smooth cost for task " + task.name());
}

}  // namespace mppi
