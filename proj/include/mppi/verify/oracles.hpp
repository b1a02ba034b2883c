#pragma once

// Reference computations that share no code path with the library's
// likelihood, controller or DDP implementations.

#include "mppi/diffusion.hpp"
#include "mppi/likelihood.hpp"

#include <vector>

namespace mppi::oracle {

/// log N(x; mean, cov) from an explicit LU determinant and inverse.
double gaussian_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// log p(tau) - log q(tau) as a product of one-step Gaussian densities of
/// the directly actuated block: p has mean x_c + f_c dt and covariance
/// B_c B_c^T dt; q adds G_c u_i dt and uses (A_i B_c)(A_i B_c)^T dt.
double brute_force_log_ratio(const DiffusionModel& model, const SamplingPolicy& sampling,
                             const Trajectory& trajectory);

/// Finite-horizon discrete LQR for x' = A x + B u with cost
/// sum 1/2 (x^T Q x + u^T R u) + 1/2 x_N^T Qf x_N. u_i = -gains[i] x_i and
/// the optimal cost from step i is 1/2 x^T cost_to_go[i] x.
struct LqrSolution {
  std::vector<Matrix> gains;       // N, m x n
  std::vector<Matrix> cost_to_go;  // N + 1, n x n
};
LqrSolution discrete_lqr(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                         const Matrix& q_final, int horizon);

/// Scalar LQ problem dx = u dt + sigma dw with running cost
/// 1/2 q x^2 + 1/2 r u^2 and terminal cost 1/2 qf x^2 over `steps` steps.
struct ScalarLq {
  double q = 1.0;
  double r = 1.0;
  double q_final = 1.0;
  double sigma = 1.0;
  double dt = 0.005;
  int steps = 100;
  double lambda() const { return r * sigma * sigma; }
};

/// Optimal expected cost 1/2 P_0 x0^2 + c_0 from the LQG Riccati recursion.
double scalar_lqg_value(const ScalarLq& lq, double x0);

/// -lambda log E[exp(-S/lambda)] for the uncontrolled Euler chain, computed
/// exactly by Gaussian integration one step at a time.
double scalar_path_integral_value(const ScalarLq& lq, double x0);

/// Unnormalised augmented-cost reduction in the special case, written out
/// from its scalar terms.
double special_case_cost_terms(double q, const Vector& u, const Vector& du, const Matrix& r,
                               double nu);

}  // namespace mppi::oracle
