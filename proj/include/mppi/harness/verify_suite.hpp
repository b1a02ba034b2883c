#pragma once

#include "mppi/diffusion.hpp"
#include "mppi/likelihood.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mppi {

struct VerifyCase {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;  // reproduces the first failing instance
};

/// A random small problem for the likelihood-ratio oracle: linear drift,
/// random G_c, full-rank B_c, invertible A_i, and a trajectory sampled
/// from the sampling law.
struct RatioInstance {
  std::uint64_t seed = 0;
  std::unique_ptr<FunctionalDiffusionModel> model;
  std::unique_ptr<SamplingPolicy> policy;
  Trajectory trajectory;
};
RatioInstance make_ratio_instance(std::uint64_t seed);

/// exp(log ratio) vs the product-of-Gaussians oracle, relative error.
VerifyCase verify_ratio(std::size_t instances = 1000, std::uint64_t seed = 1,
                        double tolerance = 1e-8);
/// -lambda log Psi vs the scalar Riccati value, in standard errors.
VerifyCase verify_feynman_kac(std::size_t rollouts = 100000, std::uint64_t seed = 7,
                              double max_standard_errors = 3.0);
/// One iLQG iteration vs discrete LQR gains and cost.
VerifyCase verify_lq(std::uint64_t seed = 3, double gain_tolerance = 1e-8,
                     double cost_tolerance = 1e-10);

/// Runs "ratio", "fk", "lq" or "all"; prints one line per case.
/// Throws std::invalid_argument for an unknown suite name.
std::vector<VerifyCase> run_verify_suite(const std::string& which, std::ostream& out);

}  // namespace mppi
