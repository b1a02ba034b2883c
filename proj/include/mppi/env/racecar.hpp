#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/task.hpp"

namespace mppi {

struct RaceCarParams {
  double mass = 21.0;      // kg
  double yaw_inertia = 1.2;  // kg m^2
  double lf = 0.34;        // CG to front axle, m
  double lr = 0.23;        // CG to rear axle, m
  double gravity = 9.81;
  double friction = 0.9;   // mu, peak of the tire curve
  double tire_b = 10.0;    // Pacejka stiffness factor
  double tire_c = 1.9;     // Pacejka shape factor
  double max_drive = 130.0;    // N at full throttle (rear axle)
  double drag = 0.5;           // N s^2 / m^2
  double rolling = 2.0;        // N s / m
  double max_steer = 0.45;     // rad at normalised steering 1
  double actuator_rate = 15.0; // 1/s, first-order actuator lag
  double slip_speed_floor = 1.0;  // m/s used in slip-angle denominators
  double inv_sqrt_rho = 0.005;
  double semi_major = 13.0;
  double semi_minor = 6.0;
  double target_speed = 7.0;
  double initial_speed = 7.0;  // v_x at the start, (0, -b) heading +x
};

/// d = |(x/a)^2 + (y/b)^2 - 1|.
double track_distance(double x, double y, double a = 13.0, double b = 6.0);

/// q = 100 d^2 + (v_x - 7)^2.
double racecar_running_cost(double x, double y, double vx, const RaceCarParams& params = {});

/// Pacejka lateral force D sin(C atan(B alpha)).
double pacejka_lateral(double alpha, double peak, double b, double c);

/// State (x, y, psi, v_x, v_y, r | steer, throttle); the c-block holds the
/// normalised actuator states driven by first-order lags toward the command.
class RaceCarModel : public ControlNoiseModel {
 public:
  explicit RaceCarModel(RaceCarParams params = {});

  Partition partition() const override { return {6, 2, 2, 2}; }
  void drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const override;
  void control_gain_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  using ControlNoiseModel::control_gain_c;
  using ControlNoiseModel::drift;

  const RaceCarParams& params() const { return params_; }

 private:
  RaceCarParams params_;
};

/// Derivative of (x, y, psi, v_x, v_y, r) for steering angle `steer` (rad)
/// and normalised throttle in [-1, 1].
Vector racecar_dynamics(const Vector& body, double steer, double throttle,
                        const RaceCarParams& params = {});

class RaceCarTask : public Task {
 public:
  explicit RaceCarTask(RaceCarParams params = {});

  std::string name() const override { return "racecar"; }
  const DiffusionModel& model() const override { return model_; }
  double running_cost(const VectorCRef& x, bool crashed) const override;
  Vector initial_state() const override;
  Vector control_lower() const override { return Vector::Constant(2, -1.0); }
  Vector control_upper() const override { return Vector::Constant(2, 1.0); }
  std::vector<std::string> state_names() const override;
  std::vector<std::string> control_names() const override;

  const RaceCarParams& params() const { return model_.params(); }

 private:
  RaceCarModel model_;
};

/// Smallest v_x among logged states with |x| >= threshold (the track ends).
/// Returns NaN when no state is in a corner.
double minimum_corner_speed(const std::vector<Vector>& states, double threshold = 10.0);

}  // namespace mppi
