#pragma once

#include "mppi/diffusion.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mppi {

class WorkerPool;

// Covariance convention used throughout this header: `sigma` is the
// diffusion covariance rate B_c B_c^T. The one-step covariance of the
// directly actuated block is sigma * dt, and in terms of
// z = dx_c / dt - f_c a transition contributes
// exp(-(dt/2) (z - mu)^T sigma^{-1} (z - mu)) to the path density.

/// Sampling law of the importance sampler: controls u_i and variance
/// transforms A_i (diffusion A_i B_c). The uncontrolled law has u = 0, A = I.
class SamplingPolicy {
 public:
  SamplingPolicy(ControlSequence controls, std::vector<Matrix> transforms);

  /// A_i = sqrt(nu) I for every step.
  static SamplingPolicy scaled_identity(ControlSequence controls, double nu, Index n_c);
  /// The uncontrolled law: zero controls and A_i = I.
  static SamplingPolicy uncontrolled(Index steps, Index m, Index n_c, double dt,
                                     double start_time = 0.0);

  const ControlSequence& controls() const { return controls_; }
  const Matrix& transform(Index i) const { return transforms_[static_cast<std::size_t>(i)]; }
  Index steps() const { return controls_.steps(); }
  double dt() const { return controls_.dt(); }

 private:
  ControlSequence controls_;
  std::vector<Matrix> transforms_;
};

struct ZMu {
  Vector z;
  Vector mu;
};

/// z = (x_next_c - x_c) / dt - f_c(x, t) and mu = G_c(x, t) u.
ZMu compute_z_mu(const DiffusionModel& model, const StateVector& x, const StateVector& x_next,
                 const Vector& u, double t, double dt);

/// Gamma^{-1} = Sigma^{-1} - (A Sigma A^T)^{-1}; Gamma itself is never formed.
///
/// Throws std::domain_error when Sigma is not positive definite or A is singular.
Matrix gamma_inverse(const Matrix& sigma, const Matrix& transform);

/// Q = (z-mu)^T Gamma^{-1} (z-mu) + 2 mu^T Sigma^{-1} (z-mu) + mu^T Sigma^{-1} mu.
double q_term(const Vector& z, const Vector& mu, const Matrix& sigma, const Matrix& gamma_inv);

/// Per-step quantities of the likelihood ratio.
struct StepTerms {
  Vector z;
  Vector mu;
  Matrix sigma;      // B_c B_c^T
  Matrix lambda;     // A sigma A^T
  Matrix gamma_inv;  // sigma^{-1} - lambda^{-1}
  double q = 0.0;
  double log_abs_det_transform = 0.0;
};

/// Evaluates every step of `trajectory` against `policy`.
///
/// Throws std::invalid_argument("inconsistent trajectory ...") when an
/// a-block transition deviates from x_a + f_a dt by more than 1e-9.
std::vector<StepTerms> likelihood_terms(const DiffusionModel& model, const SamplingPolicy& policy,
                                        const Trajectory& trajectory);

/// log of the Markov-factorised density of the directly actuated transitions
/// of `trajectory` under `law`, conditioned on the deterministic a-block.
double trajectory_log_density(const DiffusionModel& model, const SamplingPolicy& law,
                              const Trajectory& trajectory);

/// log(p/q) = sum_i log|A_i| - (dt/2) sum_i Q_i, where p is the uncontrolled
/// law and q the law described by `sampling`.
double log_likelihood_ratio(const DiffusionModel& model, const SamplingPolicy& sampling,
                            const Trajectory& trajectory);

/// General augmented running cost
/// q + 1/2 (z-mu)^T Gt^{-1} (z-mu) + mu^T H^{-1} (z-mu) + 1/2 mu^T H^{-1} mu.
double augmented_running_cost(double state_cost, const Vector& z, const Vector& mu,
                              const Matrix& gamma_inv_tilde, const Matrix& h_inv);

/// Special case A = sqrt(nu) I, B_c = G_c / sqrt(rho):
/// q + (1 - 1/nu)/2 du^T R du + u^T R du + 1/2 u^T R u.
double special_case_running_cost(double state_cost, const Vector& u, const Vector& du,
                                 const Matrix& control_cost, double nu);

/// H^{-1} for H = G_c R^{-1} G_c^T. Square G_c uses G_c^{-T} R G_c^{-1}.
Matrix h_inverse(const Matrix& gain_c, const Matrix& control_cost);

/// lambda that best satisfies B_c B_c^T = lambda G_c R^{-1} G_c^T (least squares).
double consistent_lambda(const Matrix& gain_c, const Matrix& diffusion_c,
                         const Matrix& control_cost);

/// Throws std::invalid_argument unless B_c B_c^T = lambda G_c R^{-1} G_c^T to
/// relative Frobenius error `rel_tol`.
void check_noise_consistency(const Matrix& gain_c, const Matrix& diffusion_c,
                             const Matrix& control_cost, double lambda, double rel_tol = 1e-9);

/// State-dependent running cost q(x, t) and terminal cost phi(x).
struct PathCost {
  std::function<double(const Vector& x, double t)> running;
  std::function<double(const Vector& x)> terminal;
};

/// S = phi(x_N) + sum_{i<N} q(x_i, t_i) dt.
double state_cost_to_go(const PathCost& cost, const Trajectory& trajectory, double dt,
                        double start_time = 0.0);

/// S~ = phi(x_N) + sum_{i<N} q~_i dt, with q~ from augmented_running_cost using
/// Gt^{-1} = lambda Gamma^{-1} and H^{-1} = lambda Sigma^{-1}.
///
/// exp(-S~/lambda) = exp(-S/lambda) * (p/q) / prod|A_i| holds exactly.
double augmented_cost_to_go(const DiffusionModel& model, const SamplingPolicy& sampling,
                            const Trajectory& trajectory, const PathCost& cost, double lambda);

struct FeynmanKacEstimate {
  double log_psi = 0.0;
  double psi = 0.0;
  double relative_std_error = 0.0;  // std error of psi / psi
  double value = 0.0;               // -lambda log psi
  double value_std_error = 0.0;     // delta method: lambda * relative_std_error
  std::size_t rollouts = 0;
  std::size_t diverged = 0;
};

/// Monte Carlo estimate of Psi(x0) = E_p[exp(-S/lambda)] under the uncontrolled
/// dynamics. Deterministic in (seed, rollouts) for any worker count.
FeynmanKacEstimate feynman_kac_estimate(const DiffusionModel& model, const PathCost& cost,
                                        double lambda, const StateVector& x0, Index horizon,
                                        double dt, std::size_t rollouts, std::uint64_t seed,
                                        WorkerPool* pool = nullptr, double penalty_cost = 1e6);

}  // namespace mppi
