#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/env/forest.hpp"
#include "mppi/task.hpp"

namespace mppi {

struct QuadrotorParams {
  double mass = 0.5;  // kg
  double arm = 0.17;  // m, rotor to centre
  double inertia_xx = 2.3e-3;
  double inertia_yy = 2.3e-3;
  double inertia_zz = 4.0e-3;
  double gravity = 9.81;
  double yaw_moment = 0.02;  // rotor drag moment per newton of thrust, m
  double rotor_rate = 20.0;  // 1/s, first-order rotor lag
  double drag = 0.1;         // linear translational drag, 1/s
  double inv_sqrt_rho = 0.01;
  double u_min = 0.0;  // normalised rotor command; hover is 1
  double u_max = 2.0;
};

struct QuadrotorCourse {
  double start_x = 0.0;
  double start_y = 10.0;
  double start_z = 2.0;
  double goal_x = 20.0;
  double goal_y = 10.0;
  double altitude = 2.0;  // p_z^des
  double ground = 0.0;
  double goal_radius = 1.0;
};

/// 2.5 (px-gx)^2 + 2.5 (py-gy)^2 + 150 (pz-gz)^2 + 50 psi^2 + |v|^2
/// + 350 exp(-d/12) + 1000 C.
double quadrotor_running_cost(double px, double py, double pz, double psi, double speed_sq,
                              double d, bool crashed, const QuadrotorCourse& course);

/// 2000 sum_i exp(-d_i^2 / 2) over cylinders whose surface is within `proximity`.
double ddp_obstacle_cost(double px, double py, const ObstacleForest& forest,
                         double proximity = 10.0);

/// C = 1 iff pz <= ground or (px, py) lies on or inside a cylinder.
bool quadrotor_crash_check(double px, double py, double pz, const ObstacleForest& forest,
                           double ground = 0.0);

/// Rigid body with ZYX Euler angles and four rotor lags in "+" layout.
///
/// State (p[3], v[3], roll, pitch, yaw, body rates[3] | rotor speeds[4]);
/// rotor thrust is m g sigma^2 / 4, so sigma = 1 hovers.
class QuadrotorModel : public ControlNoiseModel {
 public:
  explicit QuadrotorModel(QuadrotorParams params = {});

  Partition partition() const override { return {12, 4, 4, 4}; }
  void drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const override;
  void control_gain_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  using ControlNoiseModel::control_gain_c;
  using ControlNoiseModel::drift;

  const QuadrotorParams& params() const { return params_; }
  Vector hover_state(double x, double y, double z) const;

 private:
  QuadrotorParams params_;
};

class QuadrotorTask : public Task {
 public:
  QuadrotorTask(ObstacleForest forest, QuadrotorCourse course = {}, QuadrotorParams params = {});

  std::string name() const override { return "quadrotor"; }
  const DiffusionModel& model() const override { return model_; }
  double running_cost(const VectorCRef& x, bool crashed) const override;
  bool crash_check(const VectorCRef& x) const override;
  bool completed(const VectorCRef& x) const override;
  Vector initial_state() const override;
  Vector control_lower() const override;
  Vector control_upper() const override;
  std::vector<std::string> state_names() const override;
  std::vector<std::string> control_names() const override;

  const ObstacleForest& forest() const { return forest_; }
  const QuadrotorCourse& course() const { return course_; }
  const QuadrotorModel& quadrotor() const { return model_; }

 private:
  ObstacleForest forest_;
  QuadrotorCourse course_;
  QuadrotorModel model_;
};

}  // namespace mppi
