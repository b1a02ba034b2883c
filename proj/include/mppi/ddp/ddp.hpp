#pragma once

#include "mppi/controller.hpp"
#include "mppi/diffusion.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mppi {

/// Deterministic discrete step map x' = F(x, u, t).
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual Index state_dim() const = 0;
  virtual Index control_dim() const = 0;
  virtual void step(const Vector& x, const Vector& u, double t, Vector& out) const = 0;
  /// Jacobians of F; central finite differences unless overridden.
  virtual void jacobians(const Vector& x, const Vector& u, double t, Matrix& a, Matrix& b) const;
};

/// Noise-free Euler step of a diffusion model. Not safe for concurrent use.
class EulerStepModel : public StepModel {
 public:
  EulerStepModel(const DiffusionModel& model, double dt);
  Index state_dim() const override { return dims_.n(); }
  Index control_dim() const override { return dims_.m; }
  void step(const Vector& x, const Vector& u, double t, Vector& out) const override;

 private:
  Partition dims_;
  double dt_;
  mutable EulerStepper stepper_;
};

/// x' = A x + B u with exact Jacobians.
class LinearStepModel : public StepModel {
 public:
  LinearStepModel(Matrix a, Matrix b);
  Index state_dim() const override { return a_.rows(); }
  Index control_dim() const override { return b_.cols(); }
  void step(const Vector& x, const Vector& u, double t, Vector& out) const override;
  void jacobians(const Vector& x, const Vector& u, double t, Matrix& a, Matrix& b) const override;

 private:
  Matrix a_;
  Matrix b_;
};

struct Linearization {
  Matrix a;  // n x n
  Matrix b;  // n x m
};

/// Central differences with step 1e-5 max(1, |v_j|) per coordinate.
///
/// Throws std::domain_error if any entry is non-finite.
Linearization linearize(const StepModel& model, const Vector& x, const Vector& u, double t = 0.0);

/// Second-order expansion of a scalar function.
struct Expansion {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// State part of the DDP objective: stage cost s(x) and terminal cost phi(x).
class DdpCost {
 public:
  virtual ~DdpCost() = default;
  virtual double state_cost(const Vector& x) const = 0;
  virtual double terminal_cost(const Vector&) const { return 0.0; }
  /// Coordinates the costs depend on; empty means all.
  virtual std::vector<Index> active_indices() const { return {}; }
  /// Finite-difference expansions over active_indices unless overridden.
  virtual Expansion state_expansion(const Vector& x) const;
  virtual Expansion terminal_expansion(const Vector& x) const;
};

/// s(x) = 1/2 (x - r)^T Q (x - r), phi(x) = 1/2 (x - r)^T Qf (x - r), exact expansions.
class QuadraticDdpCost : public DdpCost {
 public:
  QuadraticDdpCost(Matrix q, Matrix q_final, Vector reference = {});
  double state_cost(const Vector& x) const override;
  double terminal_cost(const Vector& x) const override;
  Expansion state_expansion(const Vector& x) const override;
  Expansion terminal_expansion(const Vector& x) const override;

 private:
  Matrix q_;
  Matrix q_final_;
  Vector reference_;
};

/// Central-difference expansion of `f` restricted to `indices` (all when empty).
Expansion finite_difference_expansion(const std::function<double(const Vector&)>& f,
                                      const Vector& x, const std::vector<Index>& indices);

struct DdpConfig {
  Index horizon = 50;
  double dt = 0.02;
  /// Stage costs are (s(x) + 1/2 (u-u_ref)^T R (u-u_ref)) * stage_weight; <= 0 means dt.
  double stage_weight = 0.0;
  int max_iterations = 3;
  double mu_init = 1e-6;
  double mu_min = 1e-6;
  double mu_max = 1e10;
  double mu_growth = 10.0;
  std::vector<double> line_search{1.0, 0.5, 0.25, 0.1, 0.05, 0.01};
  double tolerance = 1e-7;  // relative cost decrease that ends an optimisation
  Matrix control_cost;      // R
  Vector u_ref;             // empty means zero
  Vector u_init;            // empty means zero
  Vector u_lower;           // empty means unbounded
  Vector u_upper;

  void validate(Index m) const;
  double weight() const { return stage_weight > 0.0 ? stage_weight : dt; }
};

/// Nominal trajectory with iLQG gains.
struct LocalPolicy {
  std::vector<Vector> states;    // N + 1
  std::vector<Vector> controls;  // N
  std::vector<Vector> feedforward;  // k_i
  std::vector<Matrix> feedback;     // K_i, m x n
  double expected_linear = 0.0;     // sum k^T Q_u
  double expected_quadratic = 0.0;  // sum 1/2 k^T Q_uu k

  /// Predicted decrease -(alpha dV1 + alpha^2 dV2), non-negative.
  double expected_decrease(double alpha) const {
    return -(alpha * expected_linear + alpha * alpha * expected_quadratic);
  }
};

struct Nominal {
  std::vector<Vector> states;
  std::vector<Vector> controls;
  double cost = 0.0;
};

struct IterationStats {
  bool accepted = false;
  double cost_before = 0.0;
  double cost_after = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
};

/// iLQG on a StepModel. Single-owner and deterministic.
class DdpSolver {
 public:
  DdpSolver(const StepModel& model, const DdpCost& cost, DdpConfig cfg);

  const DdpConfig& config() const { return cfg_; }
  double mu() const { return mu_; }
  void set_mu(double mu) { mu_ = mu; }

  double trajectory_cost(const std::vector<Vector>& states,
                         const std::vector<Vector>& controls) const;
  Nominal simulate(const Vector& x0, const std::vector<Vector>& controls, double t0 = 0.0) const;

  /// Riccati recursion with control regularisation mu; nullopt when the
  /// regularised Q_uu is not positive definite.
  std::optional<LocalPolicy> backward_pass(const Nominal& nominal, double mu) const;
  /// u = u_bar + alpha k + K (x - x_bar), clamped.
  Nominal forward_pass(const LocalPolicy& policy, double alpha, double t0 = 0.0) const;

  /// One backward/forward iteration with the regularisation schedule.
  /// Throws std::runtime_error when Q_uu stays indefinite up to mu_max.
  IterationStats iterate(Nominal& nominal, double t0 = 0.0);
  /// Up to max_iterations iterations, stopping at the tolerance.
  std::vector<IterationStats> optimize(Nominal& nominal, double t0 = 0.0);

 private:
  double stage_cost(const Vector& x, const Vector& u) const;

  const StepModel* model_;
  const DdpCost* cost_;
  DdpConfig cfg_;
  double mu_;
};

/// Receding-horizon DDP mirroring MppiController::step.
class DdpController : public MpcController {
 public:
  DdpController(const StepModel& model, const DdpCost& cost, DdpConfig cfg);

  Vector step(const VectorCRef& x) override;
  const ControlSequence& plan() const override { return plan_; }
  std::string name() const override { return "ddp"; }
  const DdpSolver& solver() const { return solver_; }
  const std::vector<IterationStats>& last_stats() const { return stats_; }

 private:
  DdpSolver solver_;
  ControlSequence plan_;
  std::vector<IterationStats> stats_;
};

}  // namespace mppi
