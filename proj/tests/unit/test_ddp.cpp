#include "mppi/ddp/ddp.hpp"
#include "mppi/ddp/smooth_cost.hpp"
#include "mppi/env/cartpole.hpp"
#include "mppi/env/quadrotor.hpp"
#include "mppi/env/racecar.hpp"
#include "test_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace mppi {
namespace {

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Linear map whose Jacobians come from the base-class finite differences.
class FdLinear : public StepModel {
 public:
  FdLinear(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {}
  Index state_dim() const override { return a_.rows(); }
  Index control_dim() const override { return b_.cols(); }
  void step(const Vector& x, const Vector& u, double, Vector& out) const override {
    out = a_ * x + b_ * u;
  }

 private:
  Matrix a_, b_;
};

// F(x, u) = (x0 x1 + u0, x0^2 - u0^2 + 3 x1).
class QuadraticMap : public StepModel {
 public:
  Index state_dim() const override { return 2; }
  Index control_dim() const override { return 1; }
  void step(const Vector& x, const Vector& u, double, Vector& out) const override {
    out.resize(2);
    out << x[0] * x[1] + u[0], x[0] * x[0] - u[0] * u[0] + 3.0 * x[1];
  }
};

struct LqProblem {
  Matrix a, b, q, r, qf;
  Vector x0;
};

LqProblem random_lq(std::uint64_t seed, Index n = 4, Index m = 2) {
  std::mt19937_64 rng(seed);
  LqProblem p;
  p.a = Matrix::Identity(n, n) + random_matrix(rng, n, n, 0.1);
  p.b = random_matrix(rng, n, m, 0.5);
  const Matrix mq = random_matrix(rng, n, n);
  p.q = 0.2 * mq.transpose() * mq + 0.1 * Matrix::Identity(n, n);
  const Matrix mr = random_matrix(rng, m, m);
  p.r = 0.2 * mr.transpose() * mr + Matrix::Identity(m, m);
  p.qf = 2.0 * p.q;
  p.x0 = random_matrix(rng, n, 1);
  return p;
}

DdpConfig lq_config(const LqProblem& p, int horizon) {
  DdpConfig cfg;
  cfg.horizon = horizon;
  cfg.stage_weight = 1.0;
  cfg.mu_init = 0.0;
  cfg.mu_min = 1e-12;
  cfg.max_iterations = 1;
  cfg.control_cost = p.r;
  return cfg;
}

TEST(Linearize, RecoversLinearMaps) {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(rng, 5, 5);
  const Matrix b = random_matrix(rng, 5, 2);
  const FdLinear model(a, b);
  const Linearization l = linearize(model, random_matrix(rng, 5, 1, 10.0), random_matrix(rng, 2, 1));
  EXPECT_LT((l.a - a).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((l.b - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linearize, CartPoleControlColumn) {
  const CartPoleTask task;
  const double dt = 0.02;
  const EulerStepModel model(task.model(), dt);
  const Linearization l = linearize(model, task.initial_state(), Vector::Zero(1));
  EXPECT_NEAR(l.b(3, 0), 10.0 * dt, 1e-8);
  EXPECT_NEAR(l.b.topRows(3).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(l.a(3, 3), 1.0 - 10.0 * dt, 1e-8);
}

TEST(Linearize, MatchesAnalyticJacobianOfQuadraticMap) {
  const QuadraticMap model;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_matrix(rng, 2, 1, 3.0);
    const Vector u = random_matrix(rng, 1, 1, 3.0);
    const Linearization l = linearize(model, x, u);
    Matrix a(2, 2), b(2, 1);
    a << x[1], x[0], 2.0 * x[0], 3.0;
    b << 1.0, -2.0 * u[0];
    EXPECT_LT((l.a - a).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((l.b - b).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Linearize, NonFiniteJacobianThrows) {
  class Blowup : public StepModel {
   public:
    Index state_dim() const override { return 1; }
    Index control_dim() const override { return 1; }
    void step(const Vector& x, const Vector&, double, Vector& out) const override {
      out = Vector::Constant(1, x[0] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
  } model;
  EXPECT_THROW(linearize(model, Vector::Zero(1), Vector::Zero(1)), std::domain_error);
}

TEST(BackwardPass, LqGainsMatchRiccati) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LqProblem p = random_lq(seed);
    const int horizon = 25;
    const LinearStepModel model(p.a, p.b);
    const QuadraticDdpCost cost(p.q, p.qf);
    DdpSolver solver(model, cost, lq_config(p, horizon));
    const Nominal nominal = solver.simulate(
        p.x0, std::vector<Vector>(static_cast<std::size_t>(horizon), Vector::Zero(p.b.cols())));
    const auto policy = solver.backward_pass(nominal, 0.0);
    ASSERT_TRUE(policy.has_value());
    const testoracle::Lqr lqr = testoracle::riccati(p.a, p.b, p.q, p.r, p.qf, horizon);
    for (int i = 0; i < horizon; ++i) {
      const auto s = static_cast<std::size_t>(i);
      EXPECT_LT((policy->feedback[s] + lqr.gains[s]).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_GE(policy->expected_decrease(1.0), 0.0);
    EXPECT_GE(policy->expected_decrease(0.3), 0.0);

    const Nominal optimal = solver.forward_pass(*policy, 1.0);
    const double ref = 0.5 * p.x0.dot(lqr.values[0] * p.x0);
    EXPECT_NEAR(optimal.cost, ref, 1e-10 * std::abs(ref));
  }
}

TEST(BackwardPass, ZeroCostGivesZeroGains) {
  const LqProblem p = random_lq(9);
  const LinearStepModel model(p.a, p.b);
  const QuadraticDdpCost cost(Matrix::Zero(4, 4), Matrix::Zero(4, 4));
  DdpSolver solver(model, cost, lq_config(p, 10));
  const Nominal nominal = solver.simulate(p.x0, std::vector<Vector>(10, Vector::Zero(2)));
  const auto policy = solver.backward_pass(nominal, 0.0);
  ASSERT_TRUE(policy.has_value());
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_LT(policy->feedforward[i].norm(), 1e-14);
    EXPECT_LT(policy->feedback[i].norm(), 1e-14);
  }
}

TEST(BackwardPass, NonFiniteCostThrows) {
  class NanCost : public DdpCost {
   public:
    double state_cost(const Vector&) const override { return std::nan(""); }
  } cost;
  const LqProblem p = random_lq(2);
  const LinearStepModel model(p.a, p.b);
  DdpSolver solver(model, cost, lq_config(p, 5));
  const Nominal nominal = solver.simulate(p.x0, std::vector<Vector>(5, Vector::Zero(2)));
  EXPECT_THROW(solver.backward_pass(nominal, 0.0), std::domain_error);
}

TEST(ForwardPass, ZeroStepReproducesNominal) {
  const CartPoleTask task;
  const EulerStepModel model(task.model(), 0.02);
  const auto cost = smooth_cost_adapter(task);
  DdpConfig cfg;
  cfg.horizon = 30;
  DdpSolver solver(model, *cost, cfg);
  std::vector<Vector> controls;
  for (int i = 0; i < 30; ++i) controls.push_back(Vector::Constant(1, std::sin(0.3 * i)));
  const Nominal nominal = solver.simulate(task.initial_state(), controls);
  const auto policy = solver.backward_pass(nominal, 1e-6);
  ASSERT_TRUE(policy.has_value());
  const Nominal same = solver.forward_pass(*policy, 0.0);
  for (std::size_t i = 0; i < nominal.states.size(); ++i) EXPECT_EQ(same.states[i], nominal.states[i]);
  EXPECT_EQ(same.cost, nominal.cost);
}

TEST(ForwardPass, ControlsRespectBounds) {
  const LqProblem p = random_lq(4);
  const LinearStepModel model(p.a, p.b);
  const QuadraticDdpCost cost(100.0 * p.q, 100.0 * p.qf);
  DdpConfig cfg = lq_config(p, 15);
  cfg.u_lower = Vector::Constant(2, -0.05);
  cfg.u_upper = Vector::Constant(2, 0.05);
  DdpSolver solver(model, cost, cfg);
  Nominal nominal = solver.simulate(3.0 * p.x0, std::vector<Vector>(15, Vector::Zero(2)));
  for (int it = 0; it < 5; ++it) solver.iterate(nominal);
  for (const Vector& u : nominal.controls) {
    EXPECT_LE(u.maxCoeff(), 0.05);
    EXPECT_GE(u.minCoeff(), -0.05);
  }
}

TEST(Iterate, AcceptedCostNeverIncreases) {
  const CartPoleTask task;
  const EulerStepModel model(task.model(), 0.02);
  const auto cost = smooth_cost_adapter(task);
  DdpConfig cfg;
  cfg.horizon = 50;
  cfg.u_lower = task.control_lower();
  cfg.u_upper = task.control_upper();
  DdpSolver solver(model, *cost, cfg);
  Nominal nominal = solver.simulate(task.initial_state(), std::vector<Vector>(50, Vector::Zero(1)));
  for (int it = 0; it < 20; ++it) {
    const double before = nominal.cost;
    const IterationStats s = solver.iterate(nominal);
    EXPECT_LE(nominal.cost, before);
    if (s.accepted) EXPECT_LT(s.cost_after, s.cost_before);
    else EXPECT_EQ(nominal.cost, before);
  }
}

TEST(Iterate, RejectionRaisesRegularisationUntilMax) {
  // Jacobians are exact, but every step away from the nominal controls
  // diverges, so no line-search step is ever accepted.
  class Poisoned : public StepModel {
   public:
    Index state_dim() const override { return 1; }
    Index control_dim() const override { return 1; }
    void step(const Vector& x, const Vector& u, double, Vector& out) const override {
      out = u[0] == 0.0 ? x : Vector::Constant(1, std::nan(""));
    }
    void jacobians(const Vector&, const Vector&, double, Matrix& a, Matrix& b) const override {
      a = Matrix::Ones(1, 1);
      b = Matrix::Ones(1, 1);
    }
  } model;
  const QuadraticDdpCost cost(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  DdpConfig cfg;
  cfg.horizon = 5;
  cfg.mu_init = 1e-6;
  cfg.mu_min = 1e-6;
  cfg.mu_max = 1e-1;
  DdpSolver solver(model, cost, cfg);
  Nominal nominal = solver.simulate(Vector::Ones(1), std::vector<Vector>(5, Vector::Zero(1)));
  double previous = solver.mu();
  for (int it = 0; it < 8; ++it) {
    const IterationStats s = solver.iterate(nominal);
    EXPECT_FALSE(s.accepted);
    if (previous < cfg.mu_max)
      EXPECT_GT(solver.mu(), previous);
    else
      EXPECT_EQ(solver.mu(), cfg.mu_max);
    previous = solver.mu();
  }
  EXPECT_EQ(solver.mu(), cfg.mu_max);
}

TEST(Controller, RecedingHorizonMatchesLqr) {
  const LqProblem p = random_lq(6);
  const int horizon = 20;
  const LinearStepModel model(p.a, p.b);
  const QuadraticDdpCost cost(p.q, p.qf);
  DdpController controller(model, cost, lq_config(p, horizon));
  const testoracle::Lqr lqr = testoracle::riccati(p.a, p.b, p.q, p.r, p.qf, horizon);
  Vector x = 5.0 * p.x0;
  for (int s = 0; s < 15; ++s) {
    const Vector u = controller.step(x);
    const Vector expected = -lqr.gains[0] * x;
    EXPECT_LT((u - expected).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + expected.norm()));
    x = p.a * x + p.b * u;
  }
}

TEST(Controller, Deterministic) {
  const RaceCarTask task;
  const EulerStepModel model_a(task.model(), 0.02), model_b(task.model(), 0.02);
  const auto cost = smooth_cost_adapter(task);
  DdpConfig cfg;
  cfg.horizon = 25;
  cfg.u_lower = task.control_lower();
  cfg.u_upper = task.control_upper();
  DdpController a(model_a, *cost, cfg), b(model_b, *cost, cfg);
  const Vector x = task.initial_state();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.step(x), b.step(x));
}

TEST(SmoothCost, CartPolePassesThrough) {
  const CartPoleTask task;
  const auto cost = smooth_cost_adapter(task);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_matrix(rng, 4, 1, 2.0);
    EXPECT_EQ(cost->state_cost(x), task.running_cost(x, false));
  }
}

TEST(SmoothCost, QuadrotorSwapsObstacleTerms) {
  const QuadrotorTask task(generate_forest(3.0, {}, 3));
  const auto cost = smooth_cost_adapter(task, 10.0);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    Vector x = task.initial_state();
    x.head(3) += random_matrix(rng, 3, 1, 3.0);
    const double d = task.forest().nearest_surface_distance(x[0], x[1]);
    const double expected = task.running_cost(x, false) - 350.0 * std::exp(-d / 12.0) +
                            ddp_obstacle_cost(x[0], x[1], task.forest(), 10.0);
    EXPECT_NEAR(cost->state_cost(x), expected, 1e-9 * (1.0 + std::abs(expected)));
  }
}

TEST(SmoothCost, QuadrotorGradientMatchesFiniteDifferences) {
  const QuadrotorTask task(generate_forest(4.0, {}, 1));
  const auto cost = smooth_cost_adapter(task);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x = task.initial_state();
    x.head(6) += random_matrix(rng, 6, 1, 2.0);
    x[8] += 0.2;
    if (task.forest().nearest_surface_distance(x[0], x[1]) < 0.3) continue;
    const Expansion e = cost->state_expansion(x);
    const double h = 1e-6;
    for (Index j = 0; j < x.size(); ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (cost->state_cost(xp) - cost->state_cost(xm)) / (2 * h);
      EXPECT_NEAR(e.gradient[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(SmoothCost, UnknownTaskIsRejected) {
  class Other : public Task {
   public:
    std::string name() const override { return "other"; }
    const DiffusionModel& model() const override { return inner_.model(); }
    double running_cost(const VectorCRef&, bool) const override { return 0.0; }
    Vector initial_state() const override { return Vector::Zero(4); }
    Vector control_lower() const override { return Vector::Constant(1, -1.0); }
    Vector control_upper() const override { return Vector::Constant(1, 1.0); }
    std::vector<std::string> state_names() const override { return {}; }
    std::vector<std::string> control_names() const override { return {}; }

   private:
    CartPoleTask inner_;
  } other;
  EXPECT_THROW(smooth_cost_adapter(other), std::invalid_argument);
}

}  // namespace
}  // namespace mppi
