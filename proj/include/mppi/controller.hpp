#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/noise.hpp"
#include "mppi/task.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mppi {

class WorkerPool;

struct MppiConfig {
  Index rollouts = 1000;  // K
  Index horizon = 50;     // N
  double dt = 0.02;
  double lambda = 1.0;
  double nu = 1.0;
  Matrix control_cost;  // R, m x m
  Vector u_init;        // empty means zero
  Vector u_lower;       // empty means the task limits
  Vector u_upper;
  double penalty_cost = 1e6;
  std::uint64_t seed = 0;
  int iterations = 1;
  /// Require B_c B_c^T = lambda G_c R^{-1} G_c^T at the initial state.
  bool strict_lambda = false;

  /// Fills empty fields from the task and checks every invariant.
  void resolve(const Task& task);
  void validate(Index m) const;
};

/// K perturbation sequences and their costs-to-go.
///
/// perturbation(k, i) is the executed offset v - u_i after clamping, so the
/// update never moves the plan outside the box. costs_to_go(k, i) is the cost
/// from step i onwards; terminal(k) holds phi, or penalty_cost for a diverged
/// rollout.
struct RolloutBatch {
  RolloutBatch() = default;
  RolloutBatch(Index k, Index n, Index m);

  Index rollouts = 0;
  Index horizon = 0;
  Index control_dim = 0;
  std::vector<double> perturbations;  // (k * N + i) * m + j
  Matrix step_costs;                  // K x N, q~_i dt
  Matrix costs_to_go;                 // K x N
  Vector terminal;                    // K
  std::vector<unsigned char> crashed;
  std::vector<unsigned char> diverged;

  double* perturbation(Index k, Index i) {
    return perturbations.data() + (k * horizon + i) * control_dim;
  }
  const double* perturbation(Index k, Index i) const {
    return perturbations.data() + (k * horizon + i) * control_dim;
  }
  /// Rebuilds costs_to_go from step_costs and terminal by reverse summation.
  void accumulate();
};

/// Standard deviation of one perturbation component: sqrt(nu / (rho dt)).
double perturbation_scale(double rho, double nu, double dt);

/// delta u (k, i) = sqrt(nu) eps(k, i) / (sqrt(rho) sqrt(dt)).
void sample_perturbations(const NoiseStream& noise, double rho, double nu, double dt,
                          RolloutBatch& batch);
/// Same as above for the single rollout k.
void sample_perturbations(const NoiseStream& noise, double scale, Index k, RolloutBatch& batch);

/// Numbers shared by every rollout of one optimisation pass.
struct RolloutContext {
  const Task* task = nullptr;
  Vector x0;
  const ControlSequence* plan = nullptr;
  Matrix control_cost;
  Vector u_lower;
  Vector u_upper;
  double nu = 1.0;
  double penalty_cost = 1e6;

  /// Caches R u_i and u_i^T R u_i / 2; call after setting plan and R.
  void prepare();
  std::vector<Vector> r_u;
  std::vector<double> half_u_r_u;
};

/// Per-worker buffers so rollouts do not allocate.
class RolloutWorkspace {
 public:
  explicit RolloutWorkspace(const DiffusionModel& model);

  EulerStepper stepper;
  Vector x;
  Vector last_finite;
  Vector v;
  Vector du;
  Vector r_du;
};

/// Simulates rollout k of `batch`, clamping perturbed controls and freezing
/// after a crash or divergence. Fills row k of step_costs, terminal, the
/// flags and the effective perturbations; optionally records the states.
void rollout(const RolloutContext& ctx, Index k, RolloutBatch& batch, RolloutWorkspace& ws,
             Trajectory* states = nullptr);

/// Softmax of -S / lambda, computed after subtracting min S.
Vector importance_weights(const Eigen::Ref<const Vector>& costs, double lambda);

/// u_i += sum_k w_ik du_ik with per-timestep weights, then clamps.
void update_controls(ControlSequence& plan, const RolloutBatch& batch, double lambda,
                     const Vector& u_lower, const Vector& u_upper);

/// Receding-horizon controller: one call per control period.
class MpcController {
 public:
  virtual ~MpcController() = default;
  /// Optimises from `x`, returns the control to execute and shifts the plan.
  virtual Vector step(const VectorCRef& x) = 0;
  virtual const ControlSequence& plan() const = 0;
  virtual std::string name() const = 0;
};

class MppiController : public MpcController {
 public:
  /// Throws std::invalid_argument for invalid configs, non-special-case
  /// models, or (strict mode) an inconsistent lambda.
  MppiController(const Task& task, MppiConfig cfg, WorkerPool* pool = nullptr);

  Vector step(const VectorCRef& x) override;
  const ControlSequence& plan() const override { return plan_; }
  std::string name() const override { return "mppi"; }

  const MppiConfig& config() const { return cfg_; }
  const RolloutBatch& last_batch() const { return batch_; }
  /// Non-empty when lambda differs from the noise-consistent value.
  const std::string& consistency_warning() const { return warning_; }

  /// One sample-rollout-update pass from `x` without executing or shifting.
  void optimize(const VectorCRef& x);

 private:
  const Task* task_;
  MppiConfig cfg_;
  WorkerPool* pool_;
  double rho_;
  ControlSequence plan_;
  RolloutBatch batch_;
  std::vector<std::unique_ptr<RolloutWorkspace>> workspaces_;
  std::uint64_t passes_ = 0;
  std::string warning_;
};

}  // namespace mppi
