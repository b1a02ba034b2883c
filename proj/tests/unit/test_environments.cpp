#include "mppi/env/cartpole.hpp"
#include "mppi/env/forest.hpp"
#include "mppi/env/quadrotor.hpp"
#include "mppi/env/racecar.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace mppi {
namespace {

constexpr double pi = std::numbers::pi;

TEST(CartPole, CostExamples) {
  EXPECT_EQ(cartpole_running_cost(0, 0, pi, 0), 0.0);
  EXPECT_EQ(cartpole_running_cost(0, 0, 0, 0), 2000.0);
  EXPECT_NEAR(cartpole_running_cost(1, 2, pi, 3), 14.0, 1e-12);
}

TEST(CartPole, CostZeroSet) {
  EXPECT_NEAR(cartpole_running_cost(0, 0, 3 * pi, 0), 0.0, 1e-20);
  for (int j = 0; j < 4; ++j) {
    double v[4] = {0, 0, pi, 0};
    v[j] += 1e-3;
    EXPECT_GT(cartpole_running_cost(v[0], v[1], v[2], v[3]), 0.0);
  }
}

TEST(CartPole, DynamicsExamples) {
  Vector rest = Vector::Zero(4);
  EXPECT_EQ(cartpole_dynamics(rest, 0.0), Vector::Zero(4));
  Vector up(4);
  up << 0, 0, pi, 0;
  EXPECT_NEAR(cartpole_dynamics(up, 0.0)[3], 0.0, 1e-14);
  Vector side(4);
  side << 0, 0, pi / 2, 0;
  EXPECT_NEAR(cartpole_dynamics(side, 0.0)[3], -9.81, 1e-12);
  EXPECT_EQ(cartpole_dynamics(rest, 2.0)[1], 20.0);
}

TEST(CartPole, InternalCoordinatesRoundTrip) {
  const CartPoleModel m;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    Vector phys(4);
    phys << n(rng), n(rng), n(rng) * 3, n(rng);
    EXPECT_LT((m.to_physical(m.to_internal(phys)) - phys).norm(), 1e-12);
  }
}

// The internal drift must describe the same motion as the physical model.
TEST(CartPole, InternalDriftMatchesPhysicalDynamics) {
  const CartPoleModel m;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Vector phys(4);
    phys << n(rng), n(rng), n(rng) * 3, n(rng);
    const double u = n(rng);
    const Vector x = m.to_internal(phys);
    const double h = 1e-6;
    const Vector xdot = m.drift(x, 0.0) + m.control_gain(x, 0.0) * Vector::Constant(1, u);
    const Vector fd = (m.to_physical(x + h * xdot) - m.to_physical(x - h * xdot)) / (2 * h);
    EXPECT_LT((fd - cartpole_dynamics(phys, u)).norm(), 1e-5 * (1.0 + fd.norm()));
  }
}

TEST(CartPole, ReportWrapsTheta) {
  const CartPoleTask task;
  Vector phys(4);
  phys << 0, 0, 3 * pi + 0.1, 0;
  const Vector rep = task.report_state(task.cartpole().to_internal(phys));
  EXPECT_NEAR(rep[2], -pi + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(pi), pi, 1e-15);
  EXPECT_NEAR(wrap_angle(-pi), pi, 1e-15);
}

TEST(RaceCar, CostExamples) {
  EXPECT_NEAR(racecar_running_cost(13, 0, 7), 0.0, 1e-20);
  EXPECT_NEAR(racecar_running_cost(0, 0, 7), 100.0, 1e-12);
  EXPECT_NEAR(racecar_running_cost(13, 0, 0), 49.0, 1e-12);
  EXPECT_NEAR(track_distance(0, 6), 0.0, 1e-15);
}

TEST(RaceCar, TrackDistanceSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    const double d = track_distance(x, y);
    EXPECT_GE(d, 0.0);
    EXPECT_EQ(d, track_distance(-x, y));
    EXPECT_EQ(d, track_distance(x, -y));
  }
}

TEST(RaceCar, StraightCoastingHasNoLateralMotion) {
  Vector body(6);
  body << 1, 2, 0.3, 5, 0, 0;
  const Vector d = racecar_dynamics(body, 0.0, 0.0);
  EXPECT_EQ(d[4], 0.0);
  EXPECT_EQ(d[5], 0.0);
  EXPECT_EQ(d[2], 0.0);
  EXPECT_LT(d[3], 0.0);  // drag and rolling resistance
}

Vector integrate(Vector body, double steer, double throttle, double seconds,
                 std::vector<double>* speeds = nullptr) {
  const double h = 1e-3;
  const auto steps = static_cast<int>(seconds / h);
  for (int i = 0; i < steps; ++i) {
    body += h * racecar_dynamics(body, steer, throttle);
    if (speeds != nullptr) speeds->push_back(body[3]);
  }
  return body;
}

TEST(RaceCar, ConstantThrottleIncreasesSpeedMonotonically) {
  std::vector<double> speeds;
  const Vector end = integrate(Vector::Zero(6), 0.0, 1.0, 30.0, &speeds);
  for (std::size_t i = 1; i < speeds.size(); ++i) ASSERT_GE(speeds[i], speeds[i - 1]);
  EXPECT_GT(speeds.back(), 5.0);
  EXPECT_LT(std::abs(racecar_dynamics(end, 0.0, 1.0)[3]), 1e-2);
}

TEST(RaceCar, KinematicYawRateAtLowSpeed) {
  const RaceCarParams p;
  Vector body = Vector::Zero(6);
  body[3] = 2.0;
  const double steer = 0.05;
  // Throttle that roughly balances drag keeps v_x near 2; compare against the
  // kinematic bicycle at the final speed.
  const double hold = (p.drag * 4.0 + p.rolling * 2.0) / p.max_drive;
  body = integrate(body, steer, hold, 3.0);
  const double kinematic = body[3] * std::tan(steer) / (p.lf + p.lr);
  EXPECT_NEAR(body[5] / kinematic, 1.0, 0.1);
}

TEST(RaceCar, ModelMatchesBodyDynamics) {
  const RaceCarModel m;
  Vector x(8);
  x << 1, -6, 0.2, 6, 0.3, 0.1, 0.4, 0.5;
  const Vector f = m.drift(x, 0.0);
  const Vector body = racecar_dynamics(x.head(6), x[6] * m.params().max_steer, x[7]);
  EXPECT_LT((f.head(6) - body).norm(), 1e-12);
}

TEST(RaceCar, CornerSpeed) {
  std::vector<Vector> states;
  Vector s = Vector::Zero(8);
  s[0] = 0;
  s[3] = 7;
  states.push_back(s);
  EXPECT_TRUE(std::isnan(minimum_corner_speed(states)));
  s[0] = 11;
  s[3] = 5;
  states.push_back(s);
  s[0] = -12;
  s[3] = 4;
  states.push_back(s);
  EXPECT_EQ(minimum_corner_speed(states), 4.0);
}

TEST(Quadrotor, CostExamples) {
  const QuadrotorCourse c;
  EXPECT_EQ(quadrotor_running_cost(c.goal_x, c.goal_y, c.altitude, 0, 0, INFINITY, false, c), 0.0);
  EXPECT_NEAR(quadrotor_running_cost(c.goal_x, c.goal_y, c.altitude, 0, 0, 1e9, true, c), 1000.0, 1e-9);
  EXPECT_NEAR(quadrotor_running_cost(c.goal_x, c.goal_y, c.altitude, 0, 0, 12.0, false, c),
              350.0 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(350.0 * std::exp(-1.0), 128.76, 0.01);
}

TEST(Quadrotor, DdpObstacleCostExamples) {
  EXPECT_EQ(ddp_obstacle_cost(0, 0, ObstacleForest{}), 0.0);
  const ObstacleForest one({Cylinder{1, 0, 0.5}});
  EXPECT_NEAR(ddp_obstacle_cost(0.5, 0, one), 2000.0, 1e-12);
  EXPECT_EQ(ddp_obstacle_cost(20, 0, one), 0.0);  // outside the proximity radius
  const ObstacleForest two({Cylinder{1.5, 0, 0.5}, Cylinder{-2.5, 0, 0.5}});
  EXPECT_NEAR(ddp_obstacle_cost(0, 0, two), 2000.0 * (std::exp(-0.5) + std::exp(-2.0)), 1e-9);
  EXPECT_NEAR(ddp_obstacle_cost(0, 0, two), 1483.8, 0.1);
}

TEST(Quadrotor, CrashExamples) {
  const ObstacleForest f({Cylinder{0, 0, 0.5}});
  EXPECT_TRUE(quadrotor_crash_check(10, 10, -0.01, f));
  EXPECT_TRUE(quadrotor_crash_check(10, 10, 0.0, f));
  EXPECT_FALSE(quadrotor_crash_check(10, 10, 2.0, f));
  EXPECT_TRUE(quadrotor_crash_check(0.5, 0.0, 2.0, f));
  EXPECT_FALSE(quadrotor_crash_check(0.5 + 1e-12, 0.0, 2.0, f));
}

TEST(Quadrotor, HoverIsAnEquilibrium) {
  const QuadrotorModel m;
  const Vector x = m.hover_state(3, 4, 2);
  const Vector xdot = m.drift(x, 0.0) + m.control_gain(x, 0.0) * Vector::Ones(4);
  EXPECT_LT(xdot.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Quadrotor, TaskCostUsesCrashFlag) {
  const QuadrotorTask task(ObstacleForest({Cylinder{10, 10, 0.5}}));
  const Vector x = task.initial_state();
  EXPECT_NEAR(task.running_cost(x, true) - task.running_cost(x, false), 1000.0, 1e-9);
  EXPECT_FALSE(task.crash_check(x));
  EXPECT_FALSE(task.completed(x));
  Vector at_goal = x;
  at_goal[0] = task.course().goal_x;
  at_goal[1] = task.course().goal_y;
  EXPECT_TRUE(task.completed(at_goal));
}

TEST(AllTasks, RunningCostsAreNonNegative) {
  const CartPoleTask cart;
  const RaceCarTask car;
  const QuadrotorTask quad(generate_forest(3.0, {}, 2));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  const auto random_vector = [&](Index size) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v[i] = n(rng);
    return v;
  };
  for (int i = 0; i < 1000; ++i) {
    EXPECT_GE(cart.running_cost(random_vector(4), false), 0.0);
    EXPECT_GE(car.running_cost(random_vector(8), false), 0.0);
    EXPECT_GE(quad.running_cost(random_vector(16), i % 2 == 0), 0.0);
  }
}

TEST(Forest, CountAtSpacingFour) {
  const ForestBounds b{0, 40, 0, 40};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ObstacleForest f = generate_forest(4.0, b, seed);
    EXPECT_GE(f.size(), 90u);
    EXPECT_LE(f.size(), 110u);
  }
}

TEST(Forest, DeterministicInSeed) {
  EXPECT_EQ(generate_forest(3.0, {}, 7), generate_forest(3.0, {}, 7));
  EXPECT_NE(generate_forest(3.0, {}, 7), generate_forest(3.0, {}, 8));
}

TEST(Forest, MinimumCenterDistance) {
  for (double spacing : {3.0, 4.0, 5.0}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const ObstacleForest f = generate_forest(spacing, {}, seed);
      const auto& c = f.cylinders();
      for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j)
          ASSERT_GE(std::hypot(c[i].x - c[j].x, c[i].y - c[j].y), 0.2 * spacing);
    }
  }
}

TEST(Forest, StartAndGoalClearance) {
  const ForestOptions o;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ObstacleForest f = generate_forest(3.0, {}, seed, o);
    EXPECT_GE(f.nearest_surface_distance(o.start_x, o.start_y), o.clearance);
    EXPECT_GE(f.nearest_surface_distance(o.goal_x, o.goal_y), o.clearance);
  }
}

TEST(Forest, JsonRoundTrip) {
  const ObstacleForest f = generate_forest(4.0, {}, 11);
  EXPECT_EQ(ObstacleForest::from_json(f.to_json()), f);
  EXPECT_THROW(ObstacleForest::from_json("{not json"), std::exception);
}

TEST(Forest, InvalidInputsThrow) {
  EXPECT_THROW(generate_forest(0.0, {}, 1), std::invalid_argument);
  EXPECT_THROW(generate_forest(50.0, {0, 20, 0, 20}, 1), std::invalid_argument);
  ForestOptions o;
  o.jitter = 0.5;
  EXPECT_THROW(generate_forest(3.0, {}, 1, o), std::invalid_argument);
}

TEST(Forest, SurfaceDistance) {
  const ObstacleForest f({Cylinder{0, 0, 0.5}, Cylinder{5, 0, 1.0}});
  EXPECT_DOUBLE_EQ(f.nearest_surface_distance(2, 0), 1.5);
  EXPECT_EQ(f.nearest_surface_distance(0.1, 0), 0.0);
  EXPECT_TRUE(std::isinf(ObstacleForest{}.nearest_surface_distance(0, 0)));
  std::vector<double> near;
  f.surface_distances_within(2, 0, 2.5, near);
  EXPECT_EQ(near.size(), 2u);
}

}  // namespace
}  // namespace mppi
