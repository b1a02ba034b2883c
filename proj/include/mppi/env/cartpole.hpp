#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/task.hpp"

namespace mppi {

struct CartPoleParams {
  double length = 1.0;
  double gravity = 9.81;
  double velocity_gain = 10.0;  // pddot = gain (u - pdot)
  double inv_sqrt_rho = 0.01;
  double u_max = 10.0;  // |desired velocity| limit
};

/// q = p^2 + 500 (1 + cos theta)^2 + thetadot^2 + pdot^2; theta = 0 hangs down.
double cartpole_running_cost(double p, double p_dot, double theta, double theta_dot);

/// Time derivative of the physical state (p, pdot, theta, thetadot) under u.
Vector cartpole_dynamics(const Vector& physical, double u, const CartPoleParams& params = {});

/// Velocity-servo pendulum in coordinates (p, theta, w | pdot) with
/// w = thetadot + (pdot / l) cos theta, so the control enters only pdot.
class CartPoleModel : public ControlNoiseModel {
 public:
  explicit CartPoleModel(CartPoleParams params = {});

  Partition partition() const override { return {3, 1, 1, 1}; }
  void drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const override;
  void control_gain_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  using ControlNoiseModel::control_gain_c;
  using ControlNoiseModel::drift;

  const CartPoleParams& params() const { return params_; }
  /// (p, pdot, theta, thetadot) to internal coordinates and back.
  Vector to_internal(const Vector& physical) const;
  Vector to_physical(const VectorCRef& internal) const;

 private:
  CartPoleParams params_;
};

class CartPoleTask : public Task {
 public:
  explicit CartPoleTask(CartPoleParams params = {});

  std::string name() const override { return "cartpole"; }
  const DiffusionModel& model() const override { return model_; }
  const CartPoleModel& cartpole() const { return model_; }
  double running_cost(const VectorCRef& x, bool crashed) const override;
  Vector initial_state() const override;
  Vector control_lower() const override;
  Vector control_upper() const override;
  /// Physical state with theta wrapped to (-pi, pi].
  Vector report_state(const VectorCRef& x) const override;
  std::vector<std::string> state_names() const override;
  std::vector<std::string> control_names() const override;

 private:
  CartPoleModel model_;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace mppi
