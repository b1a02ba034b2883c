#include "mppi/verify/oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mppi::oracle {

double gaussian_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  const Eigen::FullPivLU<Matrix> lu(cov);
  if (!lu.isInvertible()) throw std::domain_error("gaussian_log_pdf: singular covariance");
  const double det = lu.determinant();
  if (!(det > 0.0)) throw std::domain_error("gaussian_log_pdf: covariance not positive");
  const Vector e = x - mean;
  const double k = static_cast<double>(x.size());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + std::log(det) + e.dot(lu.inverse() * e));
}

double brute_force_log_ratio(const DiffusionModel& model, const SamplingPolicy& sampling,
                             const Trajectory& trajectory) {
  const Partition d = model.partition();
  const double dt = sampling.dt();
  double log_ratio = 0.0;
  for (Index i = 0; i < sampling.steps(); ++i) {
    const Vector& x = trajectory[static_cast<std::size_t>(i)].values();
    const Vector& next = trajectory[static_cast<std::size_t>(i + 1)].values();
    const double t = sampling.controls().time(i);
    const Vector f = model.drift(x, t).tail(d.n_c);
    const Matrix g = model.control_gain_c(x, t);
    const Matrix b = model.diffusion_c(x, t);
    const Matrix ab = sampling.transform(i) * b;

    const Vector mean_p = x.tail(d.n_c) + f * dt;
    const Vector mean_q = x.tail(d.n_c) + (f + g * sampling.controls()[i]) * dt;
    const Vector y = next.tail(d.n_c);
    log_ratio += gaussian_log_pdf(y, mean_p, b * b.transpose() * dt) -
                 gaussian_log_pdf(y, mean_q, ab * ab.transpose() * dt);
  }
  return log_ratio;
}

LqrSolution discrete_lqr(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                         const Matrix& q_final, int horizon) {
  LqrSolution out;
  out.gains.resize(static_cast<std::size_t>(horizon));
  out.cost_to_go.resize(static_cast<std::size_t>(horizon) + 1);
  Matrix p = q_final;
  out.cost_to_go.back() = p;
  for (int i = horizon - 1; i >= 0; --i) {
    const Matrix s = r + b.transpose() * p * b;
    const Matrix k = s.fullPivLu().solve(b.transpose() * p * a);
    p = q + a.transpose() * p * a - a.transpose() * p * b * k;
    p = 0.5 * (p + p.transpose());
    out.gains[static_cast<std::size_t>(i)] = k;
    out.cost_to_go[static_cast<std::size_t>(i)] = p;
  }
  return out;
}

double scalar_lqg_value(const ScalarLq& lq, double x0) {
  // x' = x + dt u + noise; stage cost (q x^2 + r u^2) dt / 2.
  double p = lq.q_final;
  double c = 0.0;
  for (int i = 0; i < lq.steps; ++i) {
    c += 0.5 * p * lq.sigma * lq.sigma * lq.dt;
    p = lq.q * lq.dt + p - p * p * lq.dt / (lq.r + lq.dt * p);
  }
  return 0.5 * p * x0 * x0 + c;
}

double scalar_path_integral_value(const ScalarLq& lq, double x0) {
  // Psi_i(x) = c_i exp(-a_i x^2 / 2).
  const double lambda = lq.lambda();
  const double s2 = lq.sigma * lq.sigma * lq.dt;
  double a = lq.q_final / lambda;
  double log_c = 0.0;
  for (int i = 0; i < lq.steps; ++i) {
    log_c -= 0.5 * std::log1p(a * s2);
    a = lq.q * lq.dt / lambda + a / (1.0 + a * s2);
  }
  return -lambda * (log_c - 0.5 * a * x0 * x0);
}

double special_case_cost_terms(double q, const Vector& u, const Vector& du, const Matrix& r,
                               double nu) {
  double quad = 0.0;
  double cross = 0.0;
  double base = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    for (Index j = 0; j < u.size(); ++j) {
      quad += du[i] * r(i, j) * du[j];
      cross += u[i] * r(i, j) * du[j];
      base += u[i] * r(i, j) * u[j];
    }
  }
  return q + 0.5 * (1.0 - 1.0 / nu) * quad + cross + 0.5 * base;
}

}  // namespace mppi::oracle
