#include "mppi/env/quadrotor.hpp"

#include <cmath>
#include <stdexcept>

namespace mppi {

double quadrotor_running_cost(double px, double py, double pz, double psi, double speed_sq,
                              double d, bool crashed, const QuadrotorCourse& course) {
  const double ex = px - course.goal_x;
  const double ey = py - course.goal_y;
  const double ez = pz - course.altitude;
  return 2.5 * ex * ex + 2.5 * ey * ey + 150.0 * ez * ez + 50.0 * psi * psi + speed_sq +
         350.0 * std::exp(-d / 12.0) + (crashed ? 1000.0 : 0.0);
}

double ddp_obstacle_cost(double px, double py, const ObstacleForest& forest, double proximity) {
  double total = 0.0;
  for (const Cylinder& c : forest.cylinders()) {
    const double dx = px - c.x;
    const double dy = py - c.y;
    const double d = std::max(std::sqrt(dx * dx + dy * dy) - c.radius, 0.0);
    if (d <= proximity) total += std::exp(-0.5 * d * d);
  }
  return 2000.0 * total;
}

bool quadrotor_crash_check(double px, double py, double pz, const ObstacleForest& forest,
                           double ground) {
  return pz <= ground || forest.collides(px, py);
}

QuadrotorModel::QuadrotorModel(QuadrotorParams params)
    : ControlNoiseModel(1.0 / (params.inv_sqrt_rho * params.inv_sqrt_rho)), params_(params) {
  if (!(params.mass > 0.0) || !(params.inertia_xx > 0.0) || !(params.inertia_yy > 0.0) ||
      !(params.inertia_zz > 0.0))
    throw std::invalid_argument("QuadrotorModel: mass and inertia must be positive");
}

void QuadrotorModel::drift(const VectorCRef& x, double, Eigen::Ref<Vector> out) const {
  const QuadrotorParams& p = params_;
  const double roll = x[6];
  const double pitch = x[7];
  const double yaw = x[8];
  const double wx = x[9];
  const double wy = x[10];
  const double wz = x[11];

  const double k_thrust = p.mass * p.gravity / 4.0;
  double f[4];
  for (int j = 0; j < 4; ++j) f[j] = k_thrust * x[12 + j] * x[12 + j];
  const double thrust = f[0] + f[1] + f[2] + f[3];
  // Rotors: 0 front (+x), 1 left (+y), 2 back, 3 right; 0 and 2 spin one way.
  const double tau_x = p.arm * (f[1] - f[3]);
  const double tau_y = p.arm * (f[2] - f[0]);
  const double tau_z = p.yaw_moment * (f[0] - f[1] + f[2] - f[3]);

  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  // Third column of R = Rz(yaw) Ry(pitch) Rx(roll).
  const double bx = cy * sp * cr + sy * sr;
  const double by = sy * sp * cr - cy * sr;
  const double bz = cp * cr;
  const double accel = thrust / p.mass;

  out[0] = x[3];
  out[1] = x[4];
  out[2] = x[5];
  out[3] = accel * bx - p.drag * x[3];
  out[4] = accel * by - p.drag * x[4];
  out[5] = accel * bz - p.gravity - p.drag * x[5];

  const double tp = sp / cp;
  out[6] = wx + (wy * sr + wz * cr) * tp;
  out[7] = wy * cr - wz * sr;
  out[8] = (wy * sr + wz * cr) / cp;

  out[9] = (tau_x - (p.inertia_zz - p.inertia_yy) * wy * wz) / p.inertia_xx;
  out[10] = (tau_y - (p.inertia_xx - p.inertia_zz) * wz * wx) / p.inertia_yy;
  out[11] = (tau_z - (p.inertia_yy - p.inertia_xx) * wx * wy) / p.inertia_zz;

  for (int j = 0; j < 4; ++j) out[12 + j] = -p.rotor_rate * x[12 + j];
}

void QuadrotorModel::control_gain_c(const VectorCRef&, double, Eigen::Ref<Matrix> out) const {
  out.setZero();
  for (int j = 0; j < 4; ++j) out(j, j) = params_.rotor_rate;
}

Vector QuadrotorModel::hover_state(double x, double y, double z) const {
  Vector s = Vector::Zero(16);
  s[0] = x;
  s[1] = y;
  s[2] = z;
  s.tail(4).setOnes();
  return s;
}

QuadrotorTask::QuadrotorTask(ObstacleForest forest, QuadrotorCourse course, QuadrotorParams params)
    : forest_(std::move(forest)), course_(course), model_(params) {}

double QuadrotorTask::running_cost(const VectorCRef& x, bool crashed) const {
  const double speed_sq = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
  return quadrotor_running_cost(x[0], x[1], x[2], x[8], speed_sq,
                                forest_.nearest_surface_distance(x[0], x[1]), crashed, course_);
}

bool QuadrotorTask::crash_check(const VectorCRef& x) const {
  return quadrotor_crash_check(x[0], x[1], x[2], forest_, course_.ground);
}

bool QuadrotorTask::completed(const VectorCRef& x) const {
  return std::hypot(x[0] - course_.goal_x, x[1] - course_.goal_y) <= course_.goal_radius;
}

Vector QuadrotorTask::initial_state() const {
  return model_.hover_state(course_.start_x, course_.start_y, course_.start_z);
}

Vector QuadrotorTask::control_lower() const { return Vector::Constant(4, model_.params().u_min); }
Vector QuadrotorTask::control_upper() const { return Vector::Constant(4, model_.params().u_max); }

std::vector<std::string> QuadrotorTask::state_names() const {
  return {"p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "roll", "pitch",
          "yaw", "w_x", "w_y", "w_z", "rotor_1", "rotor_2", "rotor_3", "rotor_4"};
}

std::vector<std::string> QuadrotorTask::control_names() const {
  return {"u_1", "u_2", "u_3", "u_4"};
}

}  // namespace mppi
