#include "mppi/harness/verify_suite.hpp"

#include "mppi/ddp/ddp.hpp"
#include "mppi/noise.hpp"
#include "mppi/verify/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mppi {

namespace {

/// Sequential draws from a counter-based stream.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : stream_(seed, 1) {}
  double normal() { return stream_.draw(0, counter_++)[0]; }
  double uniform() { return stream_.uniform(1, counter_++, 0); }
  Index integer(Index lo, Index hi) {
    return lo + static_cast<Index>(std::floor(uniform() * static_cast<double>(hi - lo + 1)));
  }
  Matrix normal(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  NoiseStream stream_;
  std::uint64_t counter_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

RatioInstance make_ratio_instance(std::uint64_t seed) {
  Draws rng(seed);
  const Index n_c = rng.integer(1, 3);
  const Index n_a = rng.integer(0, 2);
  const Index m = rng.integer(1, 3);
  const Index p = n_c + rng.integer(0, 1);
  const Index steps = rng.integer(1, 5);
  const double dts[] = {0.01, 0.05, 0.1};
  const double dt = dts[rng.integer(0, 2)];
  const Index n = n_a + n_c;

  const Matrix drift = 0.5 * rng.normal(n, n);
  const Matrix gain = rng.normal(n_c, m);
  Matrix diffusion = 0.5 * rng.normal(n_c, p);
  diffusion.leftCols(n_c) += 1.5 * Matrix::Identity(n_c, n_c);

  std::vector<Matrix> transforms;
  std::vector<Vector> controls;
  for (Index i = 0; i < steps; ++i) {
    Matrix a;
    do {
      a = (0.5 + 1.5 * rng.uniform()) * Matrix::Identity(n_c, n_c) + 0.3 * rng.normal(n_c, n_c);
    } while (std::abs(a.determinant()) < 0.1);
    transforms.push_back(a);
    controls.push_back(rng.normal(m, 1));
  }

  RatioInstance inst;
  inst.seed = seed;
  inst.model = std::make_unique<FunctionalDiffusionModel>(
      FunctionalDiffusionModel::linear(n_a, drift, gain, diffusion));
  inst.policy = std::make_unique<SamplingPolicy>(ControlSequence(controls, dt, 0.0), transforms);

  Vector x = rng.normal(n, 1);
  inst.trajectory.emplace_back(x, n_a);
  for (Index i = 0; i < steps; ++i) {
    const Vector f = drift * x;
    const Vector eps = rng.normal(p, 1);
    Vector next = x + f * dt;
    next.tail(n_c) += gain * controls[static_cast<std::size_t>(i)] * dt +
                      transforms[static_cast<std::size_t>(i)] * diffusion * eps * std::sqrt(dt);
    x = next;
    inst.trajectory.emplace_back(x, n_a);
  }
  return inst;
}

VerifyCase verify_ratio(std::size_t instances, std::uint64_t seed, double tolerance) {
  VerifyCase out{"ratio", true, 0.0, tolerance, ""};
  for (std::size_t j = 0; j < instances; ++j) {
    const std::uint64_t instance_seed = derive_seed(seed, j);
    const RatioInstance inst = make_ratio_instance(instance_seed);
    const double closed = log_likelihood_ratio(*inst.model, *inst.policy, inst.trajectory);
    const double brute = oracle::brute_force_log_ratio(*inst.model, *inst.policy, inst.trajectory);
    const double rel = std::abs(std::expm1(closed - brute));
    out.max_error = std::max(out.max_error, std::isfinite(rel) ? rel : INFINITY);
    if (!(rel <= tolerance) && out.passed) {
      out.passed = false;
      std::ostringstream os;
      os << "instance " << j << " (seed " << instance_seed << "): closed " << closed
         << " vs oracle " << brute;
      out.detail = os.str();
    }
  }
  if (out.passed) out.detail = std::to_string(instances) + " instances";
  return out;
}

VerifyCase verify_feynman_kac(std::size_t rollouts, std::uint64_t seed,
                              double max_standard_errors) {
  const oracle::ScalarLq lq;
  const double x0 = 1.0;
  const Matrix zero = Matrix::Zero(1, 1);
  const FunctionalDiffusionModel model =
      FunctionalDiffusionModel::linear(0, zero, Matrix::Ones(1, 1), Matrix::Constant(1, 1, lq.sigma));
  PathCost cost;
  cost.running = [&lq](const Vector& x, double) { return 0.5 * lq.q * x[0] * x[0]; };
  cost.terminal = [&lq](const Vector& x) { return 0.5 * lq.q_final * x[0] * x[0]; };

  const FeynmanKacEstimate est =
      feynman_kac_estimate(model, cost, lq.lambda(), StateVector(Vector::Constant(1, x0), 0), lq.steps,
                           lq.dt, rollouts, seed);
  const double riccati = oracle::scalar_lqg_value(lq, x0);
  const double in_se = std::abs(est.value - riccati) / est.value_std_error;

  VerifyCase out{"fk", in_se <= max_standard_errors, in_se, max_standard_errors, ""};
  std::ostringstream os;
  os << "estimate " << est.value << " +- " << est.value_std_error << ", riccati " << riccati
     << ", exact path integral " << oracle::scalar_path_integral_value(lq, x0) << ", K "
     << rollouts << ", seed " << seed;
  out.detail = os.str();
  return out;
}

VerifyCase verify_lq(std::uint64_t seed, double gain_tolerance, double cost_tolerance) {
  Draws rng(seed);
  const Index n = 4;
  const Index m = 2;
  const int horizon = 20;
  const Matrix a = Matrix::Identity(n, n) + 0.1 * rng.normal(n, n);
  const Matrix b = 0.5 * rng.normal(n, m);
  const Matrix mq = rng.normal(n, n);
  const Matrix q = mq.transpose() * mq * 0.2 + 0.1 * Matrix::Identity(n, n);
  const Matrix mr = rng.normal(m, m);
  const Matrix r = mr.transpose() * mr * 0.2 + Matrix::Identity(m, m);
  const Matrix q_final = 2.0 * q;
  const Vector x0 = rng.normal(n, 1);

  const oracle::LqrSolution lqr = oracle::discrete_lqr(a, b, q, r, q_final, horizon);
  const LinearStepModel model(a, b);
  const QuadraticDdpCost cost(q, q_final);
  DdpConfig cfg;
  cfg.horizon = horizon;
  cfg.stage_weight = 1.0;
  cfg.mu_init = 0.0;
  cfg.max_iterations = 1;
  cfg.control_cost = r;
  DdpSolver solver(model, cost, cfg);

  Nominal nominal = solver.simulate(x0, std::vector<Vector>(horizon, Vector::Zero(m)));
  const std::optional<LocalPolicy> policy = solver.backward_pass(nominal, 0.0);
  double gain_error = INFINITY;
  if (policy) {
    gain_error = 0.0;
    for (int i = 0; i < horizon; ++i) {
      gain_error = std::max(gain_error,
                            (policy->feedback[static_cast<std::size_t>(i)] +
                             lqr.gains[static_cast<std::size_t>(i)])
                                .cwiseAbs()
                                .maxCoeff());
    }
  }
  solver.iterate(nominal);
  const double optimal = 0.5 * x0.dot(lqr.cost_to_go.front() * x0);
  const double cost_error = std::abs(nominal.cost - optimal) / std::max(1.0, std::abs(optimal));

  VerifyCase out{"lq", gain_error <= gain_tolerance && cost_error <= cost_tolerance,
                 std::max(gain_error / gain_tolerance, cost_error / cost_tolerance), 1.0, ""};
  out.detail = "gain error " + format_double(gain_error) + ", relative cost error " +
               format_double(cost_error) + ", seed " + std::to_string(seed);
  return out;
}

std::vector<VerifyCase> run_verify_suite(const std::string& which, std::ostream& out) {
  std::vector<VerifyCase> cases;
  const bool all = which == "all";
  if (!all && which != "ratio" && which != "fk" && which != "lq")
    throw std::invalid_argument("unknown verify suite '" + which + "' (ratio, fk, lq, all)");
  if (all || which == "ratio") cases.push_back(verify_ratio());
  if (all || which == "fk") cases.push_back(verify_feynman_kac());
  if (all || which == "lq") cases.push_back(verify_lq());
  for (const VerifyCase& c : cases) {
    out << c.name << ' ' << (c.passed ? "PASS" : "FAIL") << " max_error=" << format_double(c.max_error)
        << " tolerance=" << format_double(c.tolerance) << " (" << c.detail << ")\n";
  }
  return cases;
}

}  // namespace mppi
