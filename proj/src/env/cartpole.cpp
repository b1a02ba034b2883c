#include "mppi/env/cartpole.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mppi {

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

double cartpole_running_cost(double p, double p_dot, double theta, double theta_dot) {
  const double c = 1.0 + std::cos(theta);
  return p * p + 500.0 * c * c + theta_dot * theta_dot + p_dot * p_dot;
}

Vector cartpole_dynamics(const Vector& physical, double u, const CartPoleParams& params) {
  if (physical.size() != 4) throw std::invalid_argument("cartpole_dynamics: state has 4 entries");
  const double p_dot = physical[1];
  const double theta = physical[2];
  const double p_ddot = params.velocity_gain * (u - p_dot);
  Vector out(4);
  out << p_dot, p_ddot, physical[3],
      -(params.gravity / params.length) * std::sin(theta) -
          (p_ddot / params.length) * std::cos(theta);
  return out;
}

CartPoleModel::CartPoleModel(CartPoleParams params)
    : ControlNoiseModel(1.0 / (params.inv_sqrt_rho * params.inv_sqrt_rho)), params_(params) {
  if (!(params.length > 0.0)) throw std::invalid_argument("CartPoleModel: length must be positive");
}

void CartPoleModel::drift(const VectorCRef& x, double, Eigen::Ref<Vector> out) const {
  const double l = params_.length;
  const double theta = x[1];
  const double w = x[2];
  const double p_dot = x[3];
  const double s = std::sin(theta);
  const double theta_dot = w - (p_dot / l) * std::cos(theta);
  out[0] = p_dot;
  out[1] = theta_dot;
  out[2] = -(params_.gravity / l) * s - (p_dot / l) * theta_dot * s;
  out[3] = -params_.velocity_gain * p_dot;
}

void CartPoleModel::control_gain_c(const VectorCRef&, double, Eigen::Ref<Matrix> out) const {
  out(0, 0) = params_.velocity_gain;
}

Vector CartPoleModel::to_internal(const Vector& physical) const {
  if (physical.size() != 4) throw std::invalid_argument("CartPoleModel: state has 4 entries");
  Vector x(4);
  x << physical[0], physical[2],
      physical[3] + (physical[1] / params_.length) * std::cos(physical[2]), physical[1];
  return x;
}

Vector CartPoleModel::to_physical(const VectorCRef& x) const {
  Vector out(4);
  out << x[0], x[3], x[1], x[2] - (x[3] / params_.length) * std::cos(x[1]);
  return out;
}

CartPoleTask::CartPoleTask(CartPoleParams params) : model_(params) {}

double CartPoleTask::running_cost(const VectorCRef& x, bool) const {
  const double theta_dot = x[2] - (x[3] / model_.params().length) * std::cos(x[1]);
  return cartpole_running_cost(x[0], x[3], x[1], theta_dot);
}

Vector CartPoleTask::initial_state() const { return Vector::Zero(4); }

Vector CartPoleTask::control_lower() const {
  return Vector::Constant(1, -model_.params().u_max);
}

Vector CartPoleTask::control_upper() const { return Vector::Constant(1, model_.params().u_max); }

Vector CartPoleTask::report_state(const VectorCRef& x) const {
  Vector out = model_.to_physical(x);
  out[2] = wrap_angle(out[2]);
  return out;
}

std::vector<std::string> CartPoleTask::state_names() const {
  return {"p", "p_dot", "theta", "theta_dot"};
}

std::vector<std::string> CartPoleTask::control_names() const { return {"u"}; }

}  // namespace mppi
