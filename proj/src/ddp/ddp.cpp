#include "mppi/ddp/ddp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mppi {

namespace {

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

// Second differences need a larger step than first differences.
double fd_step_second(double v) { return 1e-4 * std::max(1.0, std::abs(v)); }

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void StepModel::jacobians(const Vector& x, const Vector& u, double t, Matrix& a, Matrix& b) const {
  const Index n = state_dim();
  const Index m = control_dim();
  a.resize(n, n);
  b.resize(n, m);
  Vector plus(n);
  Vector minus(n);
  Vector xp = x;
  for (Index j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    xp[j] = x[j] + h;
    step(xp, u, t, plus);
    xp[j] = x[j] - h;
    step(xp, u, t, minus);
    xp[j] = x[j];
    a.col(j) = (plus - minus) / (2.0 * h);
  }
  Vector up = u;
  for (Index j = 0; j < m; ++j) {
    const double h = fd_step(u[j]);
    up[j] = u[j] + h;
    step(x, up, t, plus);
    up[j] = u[j] - h;
    step(x, up, t, minus);
    up[j] = u[j];
    b.col(j) = (plus - minus) / (2.0 * h);
  }
}

EulerStepModel::EulerStepModel(const DiffusionModel& model, double dt)
    : dims_(model.partition()), dt_(dt), stepper_(model) {
  if (!(dt > 0.0)) throw std::invalid_argument("EulerStepModel: dt must be positive");
}

void EulerStepModel::step(const Vector& x, const Vector& u, double t, Vector& out) const {
  out = x;
  stepper_.step(out, u, nullptr, t, dt_);
}

LinearStepModel::LinearStepModel(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows())
    throw std::invalid_argument("LinearStepModel: inconsistent shapes");
}

void LinearStepModel::step(const Vector& x, const Vector& u, double, Vector& out) const {
  out.noalias() = a_ * x;
  out.noalias() += b_ * u;
}

void LinearStepModel::jacobians(const Vector&, const Vector&, double, Matrix& a, Matrix& b) const {
  a = a_;
  b = b_;
}

Linearization linearize(const StepModel& model, const Vector& x, const Vector& u, double t) {
  if (x.size() != model.state_dim() || u.size() != model.control_dim())
    throw std::invalid_argument("linearize: dimension mismatch");
  Linearization out;
  model.jacobians(x, u, t, out.a, out.b);
  if (!out.a.allFinite() || !out.b.allFinite())
    throw std::domain_error("linearize: non-finite Jacobian");
  return out;
}

Expansion finite_difference_expansion(const std::function<double(const Vector&)>& f,
                                      const Vector& x, const std::vector<Index>& indices) {
  const Index n = x.size();
  std::vector<Index> active = indices;
  if (active.empty())
    for (Index j = 0; j < n; ++j) active.push_back(j);

  Expansion e;
  e.value = f(x);
  e.gradient = Vector::Zero(n);
  e.hessian = Matrix::Zero(n, n);
  Vector y = x;
  std::vector<double> f_plus(active.size());
  std::vector<double> f_minus(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Index j = active[a];
    const double h = fd_step_second(x[j]);
    y[j] = x[j] + h;
    f_plus[a] = f(y);
    y[j] = x[j] - h;
    f_minus[a] = f(y);
    y[j] = x[j];
    e.gradient[j] = (f_plus[a] - f_minus[a]) / (2.0 * h);
    e.hessian(j, j) = (f_plus[a] - 2.0 * e.value + f_minus[a]) / (h * h);
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      const Index i = active[a];
      const Index j = active[b];
      const double hi = fd_step_second(x[i]);
      const double hj = fd_step_second(x[j]);
      double corners[4];
      int c = 0;
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          y[i] = x[i] + si * hi;
          y[j] = x[j] + sj * hj;
          corners[c++] = f(y);
        }
      }
      y[i] = x[i];
      y[j] = x[j];
      const double h_ij = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * hi * hj);
      e.hessian(i, j) = h_ij;
      e.hessian(j, i) = h_ij;
    }
  }
  return e;
}

Expansion DdpCost::state_expansion(const Vector& x) const {
  return finite_difference_expansion([this](const Vector& v) { return state_cost(v); }, x,
                                     active_indices());
}

Expansion DdpCost::terminal_expansion(const Vector& x) const {
  return finite_difference_expansion([this](const Vector& v) { return terminal_cost(v); }, x,
                                     active_indices());
}

QuadraticDdpCost::QuadraticDdpCost(Matrix q, Matrix q_final, Vector reference)
    : q_(std::move(q)), q_final_(std::move(q_final)), reference_(std::move(reference)) {
  if (reference_.size() == 0) reference_ = Vector::Zero(q_.rows());
  if (q_.rows() != q_.cols() || q_final_.rows() != q_.rows() || q_final_.cols() != q_.cols() ||
      reference_.size() != q_.rows())
    throw std::invalid_argument("QuadraticDdpCost: inconsistent shapes");
}

double QuadraticDdpCost::state_cost(const Vector& x) const {
  const Vector e = x - reference_;
  return 0.5 * e.dot(q_ * e);
}

double QuadraticDdpCost::terminal_cost(const Vector& x) const {
  const Vector e = x - reference_;
  return 0.5 * e.dot(q_final_ * e);
}

Expansion QuadraticDdpCost::state_expansion(const Vector& x) const {
  const Vector e = x - reference_;
  return {0.5 * e.dot(q_ * e), q_ * e, q_};
}

Expansion QuadraticDdpCost::terminal_expansion(const Vector& x) const {
  const Vector e = x - reference_;
  return {0.5 * e.dot(q_final_ * e), q_final_ * e, q_final_};
}

void DdpConfig::validate(Index m) const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("DdpConfig: ") + what);
  };
  require(horizon >= 1, "horizon must be at least 1");
  require(dt > 0.0, "dt must be positive");
  require(max_iterations >= 1, "max_iterations must be at least 1");
  require(mu_init >= 0.0 && mu_min > 0.0 && mu_max >= mu_min && mu_growth > 1.0,
          "invalid regularisation schedule");
  require(!line_search.empty() && line_search.front() == 1.0, "line search must start at 1");
  require(std::is_sorted(line_search.rbegin(), line_search.rend()) &&
              std::all_of(line_search.begin(), line_search.end(), [](double a) { return a > 0.0; }),
          "line search steps must be positive and descending");
  require(tolerance >= 0.0, "tolerance must be non-negative");
  require(control_cost.rows() == m && control_cost.cols() == m, "R must be m x m");
  require(Eigen::LLT<Matrix>(symmetrized(control_cost)).info() == Eigen::Success,
          "R must be positive definite");
  require(u_ref.size() == m && u_init.size() == m, "u_ref and u_init must have size m");
  require(u_lower.size() == m && u_upper.size() == m, "limits must have size m");
  require((u_lower.array() <= u_upper.array()).all(), "require lo <= hi");
}

namespace {

DdpConfig completed_config(DdpConfig cfg, Index m) {
  if (cfg.control_cost.size() == 0) cfg.control_cost = Matrix::Identity(m, m);
  if (cfg.u_ref.size() == 0) cfg.u_ref = Vector::Zero(m);
  if (cfg.u_init.size() == 0) cfg.u_init = Vector::Zero(m);
  if (cfg.u_lower.size() == 0) cfg.u_lower = Vector::Constant(m, -std::numeric_limits<double>::infinity());
  if (cfg.u_upper.size() == 0) cfg.u_upper = Vector::Constant(m, std::numeric_limits<double>::infinity());
  cfg.validate(m);
  return cfg;
}

}  // namespace

DdpSolver::DdpSolver(const StepModel& model, const DdpCost& cost, DdpConfig cfg)
    : model_(&model), cost_(&cost), cfg_(completed_config(std::move(cfg), model.control_dim())),
      mu_(cfg_.mu_init) {}

double DdpSolver::stage_cost(const Vector& x, const Vector& u) const {
  const Vector du = u - cfg_.u_ref;
  return (cost_->state_cost(x) + 0.5 * du.dot(cfg_.control_cost * du)) * cfg_.weight();
}

double DdpSolver::trajectory_cost(const std::vector<Vector>& states,
                                  const std::vector<Vector>& controls) const {
  double total = 0.0;
  for (std::size_t i = 0; i < controls.size(); ++i) total += stage_cost(states[i], controls[i]);
  return total + cost_->terminal_cost(states.back());
}

Nominal DdpSolver::simulate(const Vector& x0, const std::vector<Vector>& controls, double t0) const {
  Nominal out;
  out.states.reserve(controls.size() + 1);
  out.states.push_back(x0);
  out.controls.reserve(controls.size());
  Vector next(x0.size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const Vector u = controls[i].cwiseMax(cfg_.u_lower).cwiseMin(cfg_.u_upper);
    model_->step(out.states.back(), u, t0 + static_cast<double>(i) * cfg_.dt, next);
    out.controls.push_back(u);
    out.states.push_back(next);
  }
  out.cost = trajectory_cost(out.states, out.controls);
  return out;
}

namespace {

// Nearest positive semidefinite matrix; keeps the recursion convex where the
// state cost curves downward (e.g. on the flank of an obstacle bump).
Matrix psd_projection(const Matrix& h) {
  const Matrix s = symmetrized(h);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() >= 0.0) return s;
  const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::optional<LocalPolicy> DdpSolver::backward_pass(const Nominal& nominal, double mu) const {
  const auto steps = nominal.controls.size();
  const Index m = model_->control_dim();
  const double w = cfg_.weight();
  const Matrix r_w = cfg_.control_cost * w;

  LocalPolicy policy;
  policy.states = nominal.states;
  policy.controls = nominal.controls;
  policy.feedforward.resize(steps);
  policy.feedback.resize(steps);

  const Expansion terminal = cost_->terminal_expansion(nominal.states.back());
  Vector v_x = terminal.gradient;
  Matrix v_xx = psd_projection(terminal.hessian);
  Matrix a;
  Matrix b;
  for (std::size_t s = steps; s-- > 0;) {
    const Vector& x = nominal.states[s];
    const Vector& u = nominal.controls[s];
    model_->jacobians(x, u, static_cast<double>(s) * cfg_.dt, a, b);
    if (!a.allFinite() || !b.allFinite()) throw std::domain_error("backward_pass: non-finite Jacobian");
    const Expansion l = cost_->state_expansion(x);
    if (!std::isfinite(l.value) || !l.gradient.allFinite() || !l.hessian.allFinite())
      throw std::domain_error("backward_pass: non-finite cost expansion");

    const Vector q_x = l.gradient * w + a.transpose() * v_x;
    const Vector q_u = r_w * (u - cfg_.u_ref) + b.transpose() * v_x;
    const Matrix vxx_a = v_xx * a;
    const Matrix q_xx = psd_projection(l.hessian) * w + a.transpose() * vxx_a;
    const Matrix q_uu = symmetrized(r_w + b.transpose() * v_xx * b);
    const Matrix q_ux = b.transpose() * vxx_a;

    const Matrix q_uu_reg = q_uu + mu * Matrix::Identity(m, m);
    Eigen::LLT<Matrix> llt(q_uu_reg);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Vector k = -llt.solve(q_u);
    Matrix gain = -llt.solve(q_ux);

    // Controls the step would push past a bound are pinned there; the free
    // ones are re-solved given the pinned values and only they get feedback.
    std::vector<Index> free_idx;
    std::vector<Index> pinned;
    for (Index j = 0; j < m; ++j) {
      const double target = u[j] + k[j];
      if (target < cfg_.u_lower[j] || target > cfg_.u_upper[j])
        pinned.push_back(j);
      else
        free_idx.push_back(j);
    }
    if (!pinned.empty()) {
      for (Index j : pinned) {
        k[j] = std::clamp(u[j] + k[j], cfg_.u_lower[j], cfg_.u_upper[j]) - u[j];
        gain.row(j).setZero();
      }
      if (!free_idx.empty()) {
        const auto nf = static_cast<Index>(free_idx.size());
        Matrix h_ff(nf, nf);
        Vector g_f(nf);
        Matrix q_fx(nf, q_ux.cols());
        for (Index r = 0; r < nf; ++r) {
          const Index fr = free_idx[static_cast<std::size_t>(r)];
          g_f[r] = q_u[fr];
          for (Index j : pinned) g_f[r] += q_uu_reg(fr, j) * k[j];
          q_fx.row(r) = q_ux.row(fr);
          for (Index c = 0; c < nf; ++c) h_ff(r, c) = q_uu_reg(fr, free_idx[static_cast<std::size_t>(c)]);
        }
        Eigen::LLT<Matrix> llt_f(h_ff);
        const Vector k_f = -llt_f.solve(g_f);
        const Matrix gain_f = -llt_f.solve(q_fx);
        for (Index r = 0; r < nf; ++r) {
          const Index fr = free_idx[static_cast<std::size_t>(r)];
          k[fr] = k_f[r];
          gain.row(fr) = gain_f.row(r);
        }
      }
    }

    policy.feedforward[s] = k;
    policy.feedback[s] = gain;
    policy.expected_linear += k.dot(q_u);
    policy.expected_quadratic += 0.5 * k.dot(q_uu * k);

    v_x = q_x + gain.transpose() * (q_uu * k) + gain.transpose() * q_u + q_ux.transpose() * k;
    v_xx = symmetrized(q_xx + gain.transpose() * q_uu * gain + gain.transpose() * q_ux +
                       q_ux.transpose() * gain);
  }
  return policy;
}

Nominal DdpSolver::forward_pass(const LocalPolicy& policy, double alpha, double t0) const {
  const auto steps = policy.controls.size();
  Nominal out;
  out.states.reserve(steps + 1);
  out.controls.reserve(steps);
  out.states.push_back(policy.states.front());
  Vector next(policy.states.front().size());
  for (std::size_t s = 0; s < steps; ++s) {
    const Vector& x = out.states.back();
    Vector u = policy.controls[s] + alpha * policy.feedforward[s] +
               policy.feedback[s] * (x - policy.states[s]);
    u = u.cwiseMax(cfg_.u_lower).cwiseMin(cfg_.u_upper);
    model_->step(x, u, t0 + static_cast<double>(s) * cfg_.dt, next);
    out.controls.push_back(std::move(u));
    out.states.push_back(next);
  }
  out.cost = trajectory_cost(out.states, out.controls);
  return out;
}

IterationStats DdpSolver::iterate(Nominal& nominal, double t0) {
  IterationStats stats;
  stats.cost_before = nominal.cost;
  stats.cost_after = nominal.cost;

  std::optional<LocalPolicy> policy = backward_pass(nominal, mu_);
  while (!policy) {
    if (mu_ >= cfg_.mu_max)
      throw std::runtime_error("DDP backward pass: Q_uu not positive definite at maximum regularisation");
    mu_ = std::min(cfg_.mu_max, std::max(cfg_.mu_min, mu_ * cfg_.mu_growth));
    policy = backward_pass(nominal, mu_);
  }

  for (double alpha : cfg_.line_search) {
    Nominal candidate = forward_pass(*policy, alpha, t0);
    if (std::isfinite(candidate.cost) && candidate.cost < nominal.cost) {
      nominal = std::move(candidate);
      stats.accepted = true;
      stats.alpha = alpha;
      stats.cost_after = nominal.cost;
      const double lowered = mu_ / cfg_.mu_growth;
      mu_ = lowered < cfg_.mu_min ? 0.0 : lowered;
      stats.mu = mu_;
      return stats;
    }
  }
  mu_ = std::min(cfg_.mu_max, std::max(cfg_.mu_min, mu_ * cfg_.mu_growth));
  stats.mu = mu_;
  return stats;
}

std::vector<IterationStats> DdpSolver::optimize(Nominal& nominal, double t0) {
  std::vector<IterationStats> all;
  for (int it = 0; it < cfg_.max_iterations; ++it) {
    all.push_back(iterate(nominal, t0));
    const IterationStats& s = all.back();
    if (!s.accepted) continue;
    if (s.cost_before - s.cost_after <= cfg_.tolerance * std::abs(s.cost_before)) break;
  }
  return all;
}

DdpController::DdpController(const StepModel& model, const DdpCost& cost, DdpConfig cfg)
    : solver_(model, cost, std::move(cfg)),
      plan_(ControlSequence::constant(solver_.config().horizon, solver_.config().u_init,
                                      solver_.config().dt)) {}

Vector DdpController::step(const VectorCRef& x) {
  Nominal nominal = solver_.simulate(x, plan_.controls(), plan_.start_time());
  stats_ = solver_.optimize(nominal, plan_.start_time());
  plan_ = ControlSequence(nominal.controls, plan_.dt(), plan_.start_time());
  Vector u0 = plan_[0];
  plan_.shift(solver_.config().u_init);
  return u0;
}

}  // namespace mppi
