#include "mppi/env/racecar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mppi {

double track_distance(double x, double y, double a, double b) {
  return std::abs((x / a) * (x / a) + (y / b) * (y / b) - 1.0);
}

double racecar_running_cost(double x, double y, double vx, const RaceCarParams& params) {
  const double d = track_distance(x, y, params.semi_major, params.semi_minor);
  const double dv = vx - params.target_speed;
  return 100.0 * d * d + dv * dv;
}

double pacejka_lateral(double alpha, double peak, double b, double c) {
  return peak * std::sin(c * std::atan(b * alpha));
}

namespace {

void body_derivative(const double* s, double steer, double throttle, const RaceCarParams& p,
                     double* out) {
  const double psi = s[2];
  const double vx = s[3];
  const double vy = s[4];
  const double r = s[5];
  const double wheelbase = p.lf + p.lr;
  const double load_front = p.mass * p.gravity * p.lr / wheelbase;
  const double load_rear = p.mass * p.gravity * p.lf / wheelbase;

  const double u = std::max(std::abs(vx), p.slip_speed_floor);
  const double alpha_f = steer - std::atan2(vy + p.lf * r, u);
  const double alpha_r = -std::atan2(vy - p.lr * r, u);

  const double rear_limit = p.friction * load_rear;
  const double fx = std::clamp(throttle * p.max_drive, -rear_limit, rear_limit);
  const double fy_f = pacejka_lateral(alpha_f, p.friction * load_front, p.tire_b, p.tire_c);
  // Friction ellipse: drive force consumes rear lateral capacity.
  const double rear_lateral = std::sqrt(std::max(0.0, rear_limit * rear_limit - fx * fx));
  const double fy_r = pacejka_lateral(alpha_r, rear_lateral, p.tire_b, p.tire_c);
  const double resist = p.drag * vx * std::abs(vx) + p.rolling * vx;

  const double c = std::cos(psi);
  const double sn = std::sin(psi);
  out[0] = vx * c - vy * sn;
  out[1] = vx * sn + vy * c;
  out[2] = r;
  out[3] = (fx - fy_f * std::sin(steer) - resist) / p.mass + vy * r;
  out[4] = (fy_r + fy_f * std::cos(steer)) / p.mass - vx * r;
  out[5] = (p.lf * fy_f * std::cos(steer) - p.lr * fy_r) / p.yaw_inertia;
}

}  // namespace

Vector racecar_dynamics(const Vector& body, double steer, double throttle,
                        const RaceCarParams& params) {
  if (body.size() != 6) throw std::invalid_argument("racecar_dynamics: body state has 6 entries");
  Vector out(6);
  body_derivative(body.data(), steer, throttle, params, out.data());
  return out;
}

RaceCarModel::RaceCarModel(RaceCarParams params)
    : ControlNoiseModel(1.0 / (params.inv_sqrt_rho * params.inv_sqrt_rho)), params_(params) {
  if (!(params.mass > 0.0) || !(params.yaw_inertia > 0.0) || !(params.lf + params.lr > 0.0))
    throw std::invalid_argument("RaceCarModel: mass, inertia and wheelbase must be positive");
}

void RaceCarModel::drift(const VectorCRef& x, double, Eigen::Ref<Vector> out) const {
  double body[6];
  double deriv[6];
  for (int j = 0; j < 6; ++j) body[j] = x[j];
  body_derivative(body, params_.max_steer * x[6], x[7], params_, deriv);
  for (int j = 0; j < 6; ++j) out[j] = deriv[j];
  out[6] = -params_.actuator_rate * x[6];
  out[7] = -params_.actuator_rate * x[7];
}

void RaceCarModel::control_gain_c(const VectorCRef&, double, Eigen::Ref<Matrix> out) const {
  out.setZero();
  out(0, 0) = params_.actuator_rate;
  out(1, 1) = params_.actuator_rate;
}

RaceCarTask::RaceCarTask(RaceCarParams params) : model_(params) {}

double RaceCarTask::running_cost(const VectorCRef& x, bool) const {
  return racecar_running_cost(x[0], x[1], x[3], model_.params());
}

Vector RaceCarTask::initial_state() const {
  Vector x = Vector::Zero(8);
  x[1] = -model_.params().semi_minor;  // bottom of the ellipse, heading +x (counterclockwise)
  x[3] = model_.params().initial_speed;
  return x;
}

std::vector<std::string> RaceCarTask::state_names() const {
  return {"x", "y", "psi", "v_x", "v_y", "yaw_rate", "steer", "throttle"};
}

std::vector<std::string> RaceCarTask::control_names() const {
  return {"steer_cmd", "throttle_cmd"};
}

double minimum_corner_speed(const std::vector<Vector>& states, double threshold) {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const Vector& s : states) {
    if (std::abs(s[0]) < threshold) continue;
    best = std::isnan(best) ? s[3] : std::min(best, s[3]);
  }
  return best;
}

}  // namespace mppi
