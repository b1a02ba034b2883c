#include "mppi/controller.hpp"

#include "mppi/likelihood.hpp"
#include "mppi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mppi {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("MppiConfig: ") + what);
}

}  // namespace

void MppiConfig::resolve(const Task& task) {
  const Index m = task.model().partition().m;
  if (control_cost.size() == 0) control_cost = Matrix::Identity(m, m);
  if (u_init.size() == 0) u_init = Vector::Zero(m);
  if (u_lower.size() == 0) u_lower = task.control_lower();
  if (u_upper.size() == 0) u_upper = task.control_upper();
  validate(m);
}

void MppiConfig::validate(Index m) const {
  require(rollouts >= 1, "K must be at least 1");
  require(horizon >= 1, "N must be at least 1");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  require(nu >= 1.0 && std::isfinite(nu), "nu must be at least 1");
  require(iterations >= 1, "iterations must be at least 1");
  require(std::isfinite(penalty_cost), "penalty_cost must be finite");
  require(control_cost.rows() == m && control_cost.cols() == m, "R must be m x m");
  require(control_cost.isApprox(control_cost.transpose()), "R must be symmetric");
  require(Eigen::LLT<Matrix>(control_cost).info() == Eigen::Success, "R must be positive definite");
  require(u_init.size() == m && u_lower.size() == m && u_upper.size() == m,
          "u_init and limits must have size m");
  require((u_lower.array() <= u_init.array()).all() && (u_init.array() <= u_upper.array()).all(),
          "require lo <= u_init <= hi");
}

RolloutBatch::RolloutBatch(Index k, Index n, Index m)
    : rollouts(k),
      horizon(n),
      control_dim(m),
      perturbations(static_cast<std::size_t>(k * n * m), 0.0),
      step_costs(Matrix::Zero(k, n)),
      costs_to_go(Matrix::Zero(k, n)),
      terminal(Vector::Zero(k)),
      crashed(static_cast<std::size_t>(k), 0),
      diverged(static_cast<std::size_t>(k), 0) {}

void RolloutBatch::accumulate() {
  for (Index k = 0; k < rollouts; ++k) {
    double s = terminal(k);
    for (Index i = horizon - 1; i >= 0; --i) {
      s += step_costs(k, i);
      costs_to_go(k, i) = s;
    }
  }
}

double perturbation_scale(double rho, double nu, double dt) { return std::sqrt(nu / (rho * dt)); }

void sample_perturbations(const NoiseStream& noise, double scale, Index k, RolloutBatch& batch) {
  const auto count = static_cast<std::size_t>(batch.horizon * batch.control_dim);
  double* row = batch.perturbation(k, 0);
  noise.draw_steps(static_cast<std::uint64_t>(k), 0, std::span<double>(row, count));
  for (std::size_t j = 0; j < count; ++j) row[j] *= scale;
}

void sample_perturbations(const NoiseStream& noise, double rho, double nu, double dt,
                          RolloutBatch& batch) {
  const double scale = perturbation_scale(rho, nu, dt);
  for (Index k = 0; k < batch.rollouts; ++k) sample_perturbations(noise, scale, k, batch);
}

void RolloutContext::prepare() {
  const Index n = plan->steps();
  r_u.resize(static_cast<std::size_t>(n));
  half_u_r_u.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    r_u[static_cast<std::size_t>(i)] = control_cost * (*plan)[i];
    half_u_r_u[static_cast<std::size_t>(i)] = 0.5 * (*plan)[i].dot(r_u[static_cast<std::size_t>(i)]);
  }
}

RolloutWorkspace::RolloutWorkspace(const DiffusionModel& model)
    : stepper(model),
      x(model.partition().n()),
      last_finite(model.partition().n()),
      v(model.partition().m),
      du(model.partition().m),
      r_du(model.partition().m) {}

void rollout(const RolloutContext& ctx, Index k, RolloutBatch& batch, RolloutWorkspace& ws,
             Trajectory* states) {
  const Task& task = *ctx.task;
  const ControlSequence& plan = *ctx.plan;
  const Index n_steps = plan.steps();
  const Index m = batch.control_dim;
  const Index n_a = task.model().partition().n_a;
  const double dt = plan.dt();
  const double quad = 0.5 * (1.0 - 1.0 / ctx.nu);

  ws.x = ctx.x0;
  bool crashed = task.crash_check(ws.x);
  bool diverged = false;
  if (states != nullptr) {
    states->clear();
    states->emplace_back(ws.x, n_a);
  }

  for (Index i = 0; i < n_steps; ++i) {
    const Vector& u = plan[i];
    Eigen::Map<Vector> du(batch.perturbation(k, i), m);
    ws.v = (u + du).cwiseMax(ctx.u_lower).cwiseMin(ctx.u_upper);
    du = ws.v - u;

    double step_cost = 0.0;
    if (!diverged) {
      if (!crashed) {
        ws.last_finite = ws.x;
        ws.stepper.step(ws.x, ws.v, nullptr, plan.time(i), dt);
        if (!ws.x.allFinite()) {
          diverged = true;
          ws.x = ws.last_finite;
        } else if (task.crash_check(ws.x)) {
          crashed = true;
        }
      }
      if (!diverged) {
        ws.r_du.noalias() = ctx.control_cost * du;
        const double q = task.running_cost(ws.x, crashed);
        step_cost = (q + quad * du.dot(ws.r_du) + ctx.r_u[static_cast<std::size_t>(i)].dot(du) +
                     ctx.half_u_r_u[static_cast<std::size_t>(i)]) *
                    dt;
        if (!std::isfinite(step_cost)) {
          diverged = true;
          step_cost = 0.0;
        }
      }
    }
    batch.step_costs(k, i) = step_cost;
    if (states != nullptr) states->emplace_back(ws.x, n_a);
  }

  batch.terminal(k) = diverged ? ctx.penalty_cost : task.terminal_cost(ws.x);
  if (!std::isfinite(batch.terminal(k))) {
    diverged = true;
    batch.terminal(k) = ctx.penalty_cost;
  }
  batch.crashed[static_cast<std::size_t>(k)] = crashed ? 1 : 0;
  batch.diverged[static_cast<std::size_t>(k)] = diverged ? 1 : 0;
}

Vector importance_weights(const Eigen::Ref<const Vector>& costs, double lambda) {
  if (costs.size() == 0) throw std::invalid_argument("importance_weights: no samples");
  if (!(lambda > 0.0)) throw std::invalid_argument("importance_weights: lambda must be positive");
  const double s_min = costs.minCoeff();
  Vector w = (-(costs.array() - s_min) / lambda).exp().matrix();
  return w / w.sum();
}

void update_controls(ControlSequence& plan, const RolloutBatch& batch, double lambda,
                     const Vector& u_lower, const Vector& u_upper) {
  if (plan.steps() != batch.horizon || plan.control_dim() != batch.control_dim)
    throw std::invalid_argument("update_controls: plan and batch shapes differ");
  const Index m = batch.control_dim;
  for (Index i = 0; i < batch.horizon; ++i) {
    const Vector w = importance_weights(batch.costs_to_go.col(i), lambda);
    Vector& u = plan[i];
    for (Index k = 0; k < batch.rollouts; ++k) {
      const double* du = batch.perturbation(k, i);
      for (Index j = 0; j < m; ++j) u[j] += w[k] * du[j];
    }
    u = u.cwiseMax(u_lower).cwiseMin(u_upper);
  }
}

namespace {

MppiConfig resolved(const Task& task, MppiConfig cfg) {
  cfg.resolve(task);
  return cfg;
}

}  // namespace

MppiController::MppiController(const Task& task, MppiConfig cfg, WorkerPool* pool)
    : task_(&task),
      cfg_(resolved(task, std::move(cfg))),
      pool_(pool),
      rho_(0.0),
      plan_(ControlSequence::constant(cfg_.horizon, cfg_.u_init, cfg_.dt)),
      batch_(cfg_.rollouts, cfg_.horizon, task.model().partition().m) {
  const DiffusionModel& model = task.model();
  const Partition d = model.partition();
  if (!model.rho().has_value() || d.n_c != d.m || d.p != d.m)
    throw std::invalid_argument(
        "MppiController: model must have B_c = G_c / sqrt(rho) with n_c = m = p");
  rho_ = *model.rho();

  const Vector x0 = task.initial_state();
  const Matrix g = model.control_gain_c(x0, 0.0);
  const Matrix b = model.diffusion_c(x0, 0.0);
  if (cfg_.strict_lambda) {
    check_noise_consistency(g, b, cfg_.control_cost, cfg_.lambda);
  } else {
    const double consistent = consistent_lambda(g, b, cfg_.control_cost);
    if (std::abs(cfg_.lambda - consistent) > 1e-9 * consistent) {
      std::ostringstream os;
      os << "lambda = " << cfg_.lambda << " differs from the noise-consistent value "
         << consistent << "; path-integral optimality is heuristic";
      warning_ = os.str();
    }
  }

  const std::size_t workers = pool_ != nullptr ? pool_->size() : 1;
  for (std::size_t w = 0; w < workers; ++w)
    workspaces_.push_back(std::make_unique<RolloutWorkspace>(model));
}

void MppiController::optimize(const VectorCRef& x) {
  const NoiseStream noise(derive_seed(cfg_.seed, passes_++), batch_.control_dim);
  const double scale = perturbation_scale(rho_, cfg_.nu, cfg_.dt);

  RolloutContext ctx;
  ctx.task = task_;
  ctx.x0 = x;
  ctx.plan = &plan_;
  ctx.control_cost = cfg_.control_cost;
  ctx.u_lower = cfg_.u_lower;
  ctx.u_upper = cfg_.u_upper;
  ctx.nu = cfg_.nu;
  ctx.penalty_cost = cfg_.penalty_cost;
  ctx.prepare();

  const auto body = [&](std::size_t worker, std::size_t begin, std::size_t end) {
    RolloutWorkspace& ws = *workspaces_[worker];
    for (std::size_t k = begin; k < end; ++k) {
      sample_perturbations(noise, scale, static_cast<Index>(k), batch_);
      rollout(ctx, static_cast<Index>(k), batch_, ws);
    }
  };
  const auto count = static_cast<std::size_t>(cfg_.rollouts);
  if (pool_ != nullptr)
    pool_->parallel_for(count, body);
  else
    body(0, 0, count);

  batch_.accumulate();
  update_controls(plan_, batch_, cfg_.lambda, cfg_.u_lower, cfg_.u_upper);
}

Vector MppiController::step(const VectorCRef& x) {
  for (int it = 0; it < cfg_.iterations; ++it) optimize(x);
  Vector u0 = plan_[0];
  plan_.shift(cfg_.u_init);
  return u0;
}

}  // namespace mppi
