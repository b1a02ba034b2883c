#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace mppi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using VectorCRef = Eigen::Ref<const Vector>;

/// Sizes of a partitioned controlled diffusion.
///
/// The first `n_a` state components are indirectly actuated and evolve
/// deterministically; the last `n_c` are directly actuated and carry the noise.
struct Partition {
  Index n_a = 0;
  Index n_c = 0;
  Index m = 0;  // control dimension
  Index p = 0;  // Brownian dimension

  Index n() const { return n_a + n_c; }
  bool operator==(const Partition&) const = default;
};

/// Full state with named access to the two partition blocks.
class StateVector {
 public:
  StateVector() = default;
  StateVector(Index n_a, Index n_c);
  StateVector(Vector values, Index n_a);

  auto a_block() const { return values_.head(n_a_); }
  auto c_block() const { return values_.tail(values_.size() - n_a_); }
  auto a_block() { return values_.head(n_a_); }
  auto c_block() { return values_.tail(values_.size() - n_a_); }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  double operator[](Index i) const { return values_[i]; }

  Index n_a() const { return n_a_; }
  Index n_c() const { return values_.size() - n_a_; }
  Index size() const { return values_.size(); }

  /// A state with any non-finite entry is a diverged state.
  bool diverged() const { return !values_.allFinite(); }

 private:
  Vector values_;
  Index n_a_ = 0;
};

/// Discrete trajectory x_0, ..., x_N.
using Trajectory = std::vector<StateVector>;

/// Open-loop plan (u_0, ..., u_{N-1}) on a fixed time grid.
class ControlSequence {
 public:
  ControlSequence() = default;
  ControlSequence(std::vector<Vector> controls, double dt, double start_time = 0.0);
  static ControlSequence constant(Index steps, const Vector& value, double dt,
                                  double start_time = 0.0);

  Index steps() const { return static_cast<Index>(controls_.size()); }
  Index control_dim() const { return controls_.empty() ? 0 : controls_.front().size(); }
  double dt() const { return dt_; }
  double start_time() const { return start_time_; }
  double time(Index i) const { return start_time_ + static_cast<double>(i) * dt_; }
  void set_start_time(double t) { start_time_ = t; }

  const Vector& operator[](Index i) const { return controls_[static_cast<std::size_t>(i)]; }
  Vector& operator[](Index i) { return controls_[static_cast<std::size_t>(i)]; }
  const std::vector<Vector>& controls() const { return controls_; }

  /// Elementwise clamp of every control into [lo, hi].
  void clamp(const Vector& lo, const Vector& hi);
  /// Drops u_0, moves every control one slot earlier and appends `fill`.
  void shift(const Vector& fill);

 private:
  std::vector<Vector> controls_;
  double dt_ = 0.0;
  double start_time_ = 0.0;
};

/// dx = f(x,t) dt + G(x,t) u dt + B(x,t) dw with G and B zero on the top
/// (indirectly actuated) block.
///
/// Implementations provide only the bottom blocks G_c and B_c, so the zero
/// top block holds by construction. All methods must be safe to call
/// concurrently on a shared instance.
class DiffusionModel {
 public:
  virtual ~DiffusionModel() = default;

  virtual Partition partition() const = 0;

  /// Drift f(x,t) for the full state; `out` has size n.
  virtual void drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const = 0;
  /// Bottom block G_c(x,t), size n_c x m.
  virtual void control_gain_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const = 0;
  /// Bottom block B_c(x,t), size n_c x p.
  virtual void diffusion_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const = 0;

  /// Noise scale rho when the model has the control-noise form
  /// B_c = G_c / sqrt(rho) with p == m; empty otherwise.
  virtual std::optional<double> rho() const { return std::nullopt; }

  Vector drift(const VectorCRef& x, double t) const;
  Matrix control_gain_c(const VectorCRef& x, double t) const;
  Matrix diffusion_c(const VectorCRef& x, double t) const;
  /// Full n x m gain with the zero top block.
  Matrix control_gain(const VectorCRef& x, double t) const;
  /// Full n x p diffusion with the zero top block.
  Matrix diffusion(const VectorCRef& x, double t) const;
};

/// Base for the special-case plants: p == m and B_c = G_c / sqrt(rho).
class ControlNoiseModel : public DiffusionModel {
 public:
  explicit ControlNoiseModel(double rho);

  void diffusion_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  std::optional<double> rho() const override { return rho_; }
  using DiffusionModel::diffusion_c;

 private:
  double rho_;
  double inv_sqrt_rho_;
};

/// Model assembled from callables; used for analytic test systems.
class FunctionalDiffusionModel : public DiffusionModel {
 public:
  using DriftFn = std::function<Vector(const Vector& x, double t)>;
  using BlockFn = std::function<Matrix(const Vector& x, double t)>;

  FunctionalDiffusionModel(Partition dims, DriftFn drift, BlockFn gain_c, BlockFn diffusion_c,
                           std::optional<double> rho = std::nullopt);

  /// Linear-Gaussian system f = F x, constant G_c and B_c.
  static FunctionalDiffusionModel linear(Index n_a, const Matrix& drift_matrix,
                                         const Matrix& gain_c, const Matrix& diffusion_c);

  Partition partition() const override { return dims_; }
  void drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const override;
  void control_gain_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  void diffusion_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const override;
  std::optional<double> rho() const override { return rho_; }
  using DiffusionModel::control_gain_c;
  using DiffusionModel::diffusion_c;
  using DiffusionModel::drift;

 private:
  Partition dims_;
  DriftFn drift_;
  BlockFn gain_c_;
  BlockFn diffusion_c_;
  std::optional<double> rho_;
};

/// One Euler-Maruyama step x + (f + G u) dt + B eps sqrt(dt).
///
/// Throws std::invalid_argument on dimension mismatch or dt <= 0. A non-finite
/// result is returned as is and reports `diverged()`.
StateVector euler_step(const DiffusionModel& model, const StateVector& x, const Vector& u,
                       const Vector& eps, double dt, double t = 0.0);

/// Natural step covariance B_c B_c^T dt of the directly actuated block.
Matrix natural_step_covariance(const DiffusionModel& model, const StateVector& x, double t,
                               double dt);

/// Allocation-free Euler stepping for hot loops; one instance per worker.
class EulerStepper {
 public:
  explicit EulerStepper(const DiffusionModel& model);

  /// In-place step. `eps` may be null for a noise-free step.
  void step(Eigen::Ref<Vector> x, const Vector& u, const Vector* eps, double t, double dt);

  const DiffusionModel& model() const { return *model_; }

 private:
  const DiffusionModel* model_;
  Partition dims_;
  Vector f_;
  Matrix gain_;
  Matrix diffusion_;
};

}  // namespace mppi
