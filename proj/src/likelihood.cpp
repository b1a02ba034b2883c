#include "mppi/likelihood.hpp"

#include "mppi/noise.hpp"
#include "mppi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mppi {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix spd_inverse(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string(what) + " is not positive definite");
  return symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) throw std::domain_error("covariance is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void require_square(const Matrix& m, Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument(std::string(what) + ": expected a square matrix of size " +
                                std::to_string(n));
}

constexpr double kTransitionTolerance = 1e-9;

}  // namespace

SamplingPolicy::SamplingPolicy(ControlSequence controls, std::vector<Matrix> transforms)
    : controls_(std::move(controls)), transforms_(std::move(transforms)) {
  if (static_cast<Index>(transforms_.size()) != controls_.steps())
    throw std::invalid_argument("SamplingPolicy: one variance transform per step required");
  for (const Matrix& a : transforms_) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SamplingPolicy: transform not square");
    if (!a.fullPivLu().isInvertible())
      throw std::domain_error("SamplingPolicy: variance transform is singular");
  }
}

SamplingPolicy SamplingPolicy::scaled_identity(ControlSequence controls, double nu, Index n_c) {
  if (!(nu > 0.0)) throw std::invalid_argument("SamplingPolicy: nu must be positive");
  std::vector<Matrix> transforms(static_cast<std::size_t>(controls.steps()),
                                 std::sqrt(nu) * Matrix::Identity(n_c, n_c));
  return {std::move(controls), std::move(transforms)};
}

SamplingPolicy SamplingPolicy::uncontrolled(Index steps, Index m, Index n_c, double dt,
                                            double start_time) {
  return {ControlSequence::constant(steps, Vector::Zero(m), dt, start_time),
          std::vector<Matrix>(static_cast<std::size_t>(steps), Matrix::Identity(n_c, n_c))};
}

ZMu compute_z_mu(const DiffusionModel& model, const StateVector& x, const StateVector& x_next,
                 const Vector& u, double t, double dt) {
  const Partition d = model.partition();
  if (x.size() != d.n() || x_next.size() != d.n() || u.size() != d.m)
    throw std::invalid_argument("compute_z_mu: dimension mismatch");
  const Vector f = model.drift(x.values(), t);
  ZMu out;
  out.z = (x_next.values().tail(d.n_c) - x.values().tail(d.n_c)) / dt - f.tail(d.n_c);
  out.mu = model.control_gain_c(x.values(), t) * u;
  return out;
}

Matrix gamma_inverse(const Matrix& sigma, const Matrix& transform) {
  require_square(sigma, sigma.rows(), "gamma_inverse(sigma)");
  require_square(transform, sigma.rows(), "gamma_inverse(A)");
  if (!transform.fullPivLu().isInvertible())
    throw std::domain_error("gamma_inverse: variance transform A is singular");
  const Matrix sigma_inv = spd_inverse(sigma, "gamma_inverse: sigma");
  const Matrix lambda = transform * symmetrized(sigma) * transform.transpose();
  const Matrix lambda_inv = spd_inverse(lambda, "gamma_inverse: A sigma A^T");
  return sigma_inv - lambda_inv;
}

double q_term(const Vector& z, const Vector& mu, const Matrix& sigma, const Matrix& gamma_inv) {
  const Index n = z.size();
  if (mu.size() != n) throw std::invalid_argument("q_term: z and mu differ in size");
  require_square(sigma, n, "q_term(sigma)");
  require_square(gamma_inv, n, "q_term(gamma_inv)");
  const Vector w = z - mu;
  const Vector sigma_inv_mu = spd_inverse(sigma, "q_term: sigma") * mu;
  return w.dot(gamma_inv * w) + 2.0 * sigma_inv_mu.dot(w) + sigma_inv_mu.dot(mu);
}

std::vector<StepTerms> likelihood_terms(const DiffusionModel& model, const SamplingPolicy& policy,
                                        const Trajectory& trajectory) {
  const Partition d = model.partition();
  const Index steps = policy.steps();
  if (static_cast<Index>(trajectory.size()) != steps + 1)
    throw std::invalid_argument("likelihood_terms: trajectory must hold N + 1 states");
  if (policy.controls().control_dim() != d.m)
    throw std::invalid_argument("likelihood_terms: control dimension mismatch");
  const double dt = policy.dt();

  std::vector<StepTerms> terms;
  terms.reserve(static_cast<std::size_t>(steps));
  for (Index i = 0; i < steps; ++i) {
    const StateVector& x = trajectory[static_cast<std::size_t>(i)];
    const StateVector& next = trajectory[static_cast<std::size_t>(i + 1)];
    if (x.size() != d.n() || next.size() != d.n())
      throw std::invalid_argument("likelihood_terms: state dimension mismatch");
    const double t = policy.controls().time(i);

    const Vector f = model.drift(x.values(), t);
    const double residual =
        d.n_a == 0 ? 0.0
                   : (next.values().head(d.n_a) - x.values().head(d.n_a) - f.head(d.n_a) * dt)
                         .cwiseAbs()
                         .maxCoeff();
    if (residual > kTransitionTolerance)
      throw std::invalid_argument("inconsistent trajectory: a-block residual " +
                                  std::to_string(residual) + " at step " + std::to_string(i));

    StepTerms step;
    const Matrix& a = policy.transform(i);
    require_square(a, d.n_c, "likelihood_terms(A)");
    const ZMu zmu = compute_z_mu(model, x, next, policy.controls()[i], t, dt);
    const Matrix bc = model.diffusion_c(x.values(), t);
    step.z = zmu.z;
    step.mu = zmu.mu;
    step.sigma = symmetrized(bc * bc.transpose());
    step.lambda = symmetrized(a * step.sigma * a.transpose());
    step.gamma_inv = gamma_inverse(step.sigma, a);
    step.q = q_term(step.z, step.mu, step.sigma, step.gamma_inv);
    step.log_abs_det_transform = std::log(std::abs(a.fullPivLu().determinant()));
    terms.push_back(std::move(step));
  }
  return terms;
}

double trajectory_log_density(const DiffusionModel& model, const SamplingPolicy& law,
                              const Trajectory& trajectory) {
  const std::vector<StepTerms> terms = likelihood_terms(model, law, trajectory);
  const double dt = law.dt();
  const Index n_c = model.partition().n_c;
  const double log_two_pi = std::log(2.0 * std::numbers::pi);

  double log_density = 0.0;
  for (const StepTerms& step : terms) {
    const Vector w = step.z - step.mu;
    const double log_det_step = log_det_spd(step.lambda * dt);
    const double quadratic = w.dot(spd_inverse(step.lambda, "step covariance") * w);
    log_density += -0.5 * (static_cast<double>(n_c) * log_two_pi + log_det_step) -
                   0.5 * dt * quadratic;
  }
  return log_density;
}

double log_likelihood_ratio(const DiffusionModel& model, const SamplingPolicy& sampling,
                            const Trajectory& trajectory) {
  const std::vector<StepTerms> terms = likelihood_terms(model, sampling, trajectory);
  double log_det = 0.0;
  double q_sum = 0.0;
  for (const StepTerms& step : terms) {
    log_det += step.log_abs_det_transform;
    q_sum += step.q;
  }
  return log_det - 0.5 * sampling.dt() * q_sum;
}

double augmented_running_cost(double state_cost, const Vector& z, const Vector& mu,
                              const Matrix& gamma_inv_tilde, const Matrix& h_inv) {
  const Vector w = z - mu;
  const Vector h_inv_mu = h_inv * mu;
  return state_cost + 0.5 * w.dot(gamma_inv_tilde * w) + h_inv_mu.dot(w) + 0.5 * h_inv_mu.dot(mu);
}

double special_case_running_cost(double state_cost, const Vector& u, const Vector& du,
                                 const Matrix& control_cost, double nu) {
  const Vector r_du = control_cost * du;
  return state_cost + 0.5 * (1.0 - 1.0 / nu) * du.dot(r_du) + u.dot(r_du) +
         0.5 * u.dot(control_cost * u);
}

Matrix h_inverse(const Matrix& gain_c, const Matrix& control_cost) {
  require_square(control_cost, gain_c.cols(), "h_inverse(R)");
  if (gain_c.rows() == gain_c.cols()) {
    Eigen::FullPivLU<Matrix> lu(gain_c);
    if (!lu.isInvertible()) throw std::domain_error("h_inverse: G_c is singular");
    const Matrix g_inv = lu.inverse();
    return symmetrized(g_inv.transpose() * control_cost * g_inv);
  }
  const Matrix r_inv = spd_inverse(control_cost, "h_inverse: R");
  return spd_inverse(gain_c * r_inv * gain_c.transpose(), "h_inverse: G R^-1 G^T");
}

double consistent_lambda(const Matrix& gain_c, const Matrix& diffusion_c,
                         const Matrix& control_cost) {
  const Matrix lhs = diffusion_c * diffusion_c.transpose();
  const Matrix basis =
      gain_c * spd_inverse(control_cost, "consistent_lambda: R") * gain_c.transpose();
  const double denom = basis.squaredNorm();
  if (!(denom > 0.0)) throw std::domain_error("consistent_lambda: G_c R^-1 G_c^T vanishes");
  return (lhs.array() * basis.array()).sum() / denom;
}

void check_noise_consistency(const Matrix& gain_c, const Matrix& diffusion_c,
                             const Matrix& control_cost, double lambda, double rel_tol) {
  const Matrix lhs = diffusion_c * diffusion_c.transpose();
  const Matrix rhs =
      lambda * gain_c * spd_inverse(control_cost, "noise consistency: R") * gain_c.transpose();
  const double scale = std::max(lhs.norm(), rhs.norm());
  const double rel = scale > 0.0 ? (lhs - rhs).norm() / scale : 0.0;
  if (rel > rel_tol) {
    throw std::invalid_argument(
        "noise/cost consistency B_c B_c^T = lambda G_c R^-1 G_c^T violated (relative error " +
        std::to_string(rel) + ", consistent lambda " +
        std::to_string(consistent_lambda(gain_c, diffusion_c, control_cost)) + ")");
  }
}

double state_cost_to_go(const PathCost& cost, const Trajectory& trajectory, double dt,
                        double start_time) {
  if (trajectory.empty()) throw std::invalid_argument("state_cost_to_go: empty trajectory");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i)
    total += cost.running(trajectory[i].values(), start_time + static_cast<double>(i) * dt) * dt;
  if (cost.terminal) total += cost.terminal(trajectory.back().values());
  return total;
}

double augmented_cost_to_go(const DiffusionModel& model, const SamplingPolicy& sampling,
                            const Trajectory& trajectory, const PathCost& cost, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("augmented_cost_to_go: lambda must be positive");
  const std::vector<StepTerms> terms = likelihood_terms(model, sampling, trajectory);
  const double dt = sampling.dt();
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const StepTerms& step = terms[i];
    const double q = cost.running(trajectory[i].values(), sampling.controls().time(static_cast<Index>(i)));
    const Matrix gamma_inv_tilde = lambda * step.gamma_inv;
    const Matrix h_inv = lambda * spd_inverse(step.sigma, "augmented_cost_to_go: sigma");
    total += augmented_running_cost(q, step.z, step.mu, gamma_inv_tilde, h_inv) * dt;
  }
  if (cost.terminal) total += cost.terminal(trajectory.back().values());
  return total;
}

FeynmanKacEstimate feynman_kac_estimate(const DiffusionModel& model, const PathCost& cost,
                                        double lambda, const StateVector& x0, Index horizon,
                                        double dt, std::size_t rollouts, std::uint64_t seed,
                                        WorkerPool* pool, double penalty_cost) {
  if (rollouts < 1) throw std::invalid_argument("feynman_kac_estimate: need at least one rollout");
  if (!(lambda > 0.0) || !(dt > 0.0) || horizon < 1)
    throw std::invalid_argument("feynman_kac_estimate: invalid lambda, dt or horizon");
  const Partition d = model.partition();
  if (x0.size() != d.n()) throw std::invalid_argument("feynman_kac_estimate: bad initial state");

  const NoiseStream noise(seed, d.p);
  std::vector<double> path_cost(rollouts);
  std::vector<unsigned char> diverged(rollouts, 0);

  const auto run = [&](std::size_t, std::size_t begin, std::size_t end) {
    EulerStepper stepper(model);
    const Vector zero_u = Vector::Zero(d.m);
    Vector x(d.n());
    Vector eps(d.p);
    for (std::size_t k = begin; k < end; ++k) {
      x = x0.values();
      double s = 0.0;
      for (Index i = 0; i < horizon; ++i) {
        const double t = static_cast<double>(i) * dt;
        s += cost.running(x, t) * dt;
        noise.draw(k, static_cast<std::uint64_t>(i), std::span<double>(eps.data(), eps.size()));
        stepper.step(x, zero_u, &eps, t, dt);
        if (!x.allFinite()) {
          diverged[k] = 1;
          break;
        }
      }
      if (diverged[k] == 0 && cost.terminal) s += cost.terminal(x);
      path_cost[k] = diverged[k] != 0 ? penalty_cost : s;
    }
  };
  if (pool != nullptr)
    pool->parallel_for(rollouts, run);
  else
    run(0, 0, rollouts);

  // Shifted weights keep exp() in range; the ordered sum keeps the result
  // independent of the worker count.
  const double s_min = *std::min_element(path_cost.begin(), path_cost.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double s : path_cost) {
    const double w = std::exp(-(s - s_min) / lambda);
    sum += w;
    sum_sq += w * w;
  }
  const double count = static_cast<double>(rollouts);
  const double mean = sum / count;
  const double variance = rollouts > 1 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0)) : 0.0;

  FeynmanKacEstimate out;
  out.rollouts = rollouts;
  out.diverged = static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), 1));
  out.log_psi = std::log(mean) - s_min / lambda;
  out.psi = std::exp(out.log_psi);
  out.relative_std_error = std::sqrt(variance / count) / mean;
  out.value = -lambda * out.log_psi;
  out.value_std_error = lambda * out.relative_std_error;
  return out;
}

}  // namespace mppi
