#include "mppi/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mppi {

StateVector::StateVector(Index n_a, Index n_c) : values_(Vector::Zero(n_a + n_c)), n_a_(n_a) {
  if (n_a < 0 || n_c < 0) throw std::invalid_argument("StateVector: negative block size");
}

StateVector::StateVector(Vector values, Index n_a) : values_(std::move(values)), n_a_(n_a) {
  if (n_a < 0 || n_a > values_.size())
    throw std::invalid_argument("StateVector: a-block larger than the state");
}

Vector DiffusionModel::drift(const VectorCRef& x, double t) const {
  Vector out(partition().n());
  drift(x, t, out);
  return out;
}

Matrix DiffusionModel::control_gain_c(const VectorCRef& x, double t) const {
  const Partition d = partition();
  Matrix out(d.n_c, d.m);
  control_gain_c(x, t, out);
  return out;
}

Matrix DiffusionModel::diffusion_c(const VectorCRef& x, double t) const {
  const Partition d = partition();
  Matrix out(d.n_c, d.p);
  diffusion_c(x, t, out);
  return out;
}

Matrix DiffusionModel::control_gain(const VectorCRef& x, double t) const {
  const Partition d = partition();
  Matrix out = Matrix::Zero(d.n(), d.m);
  out.bottomRows(d.n_c) = control_gain_c(x, t);
  return out;
}

Matrix DiffusionModel::diffusion(const VectorCRef& x, double t) const {
  const Partition d = partition();
  Matrix out = Matrix::Zero(d.n(), d.p);
  out.bottomRows(d.n_c) = diffusion_c(x, t);
  return out;
}

ControlNoiseModel::ControlNoiseModel(double rho) : rho_(rho) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("ControlNoiseModel: rho must be positive");
  inv_sqrt_rho_ = 1.0 / std::sqrt(rho);
}

void ControlNoiseModel::diffusion_c(const VectorCRef& x, double t, Eigen::Ref<Matrix> out) const {
  control_gain_c(x, t, out);
  out *= inv_sqrt_rho_;
}

namespace {

void check_dims(const Partition& d, Index x, Index u, Index eps) {
  if (x != d.n() || u != d.m || eps != d.p) {
    throw std::invalid_argument("euler_step: dimension mismatch (state " + std::to_string(x) +
                                "/" + std::to_string(d.n()) + ", control " + std::to_string(u) +
                                "/" + std::to_string(d.m) + ", noise " + std::to_string(eps) +
                                "/" + std::to_string(d.p) + ")");
  }
}

}  // namespace

StateVector euler_step(const DiffusionModel& model, const StateVector& x, const Vector& u,
                       const Vector& eps, double dt, double t) {
  const Partition d = model.partition();
  check_dims(d, x.size(), u.size(), eps.size());
  if (x.n_a() != d.n_a) throw std::invalid_argument("euler_step: partition mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");

  EulerStepper stepper(model);
  StateVector next = x;
  stepper.step(next.values(), u, &eps, t, dt);
  return next;
}

Matrix natural_step_covariance(const DiffusionModel& model, const StateVector& x, double t,
                               double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("natural_step_covariance: dt must be positive");
  if (x.size() != model.partition().n())
    throw std::invalid_argument("natural_step_covariance: dimension mismatch");
  const Matrix bc = model.diffusion_c(x.values(), t);
  return bc * bc.transpose() * dt;
}

EulerStepper::EulerStepper(const DiffusionModel& model)
    : model_(&model),
      dims_(model.partition()),
      f_(dims_.n()),
      gain_(dims_.n_c, dims_.m),
      diffusion_(dims_.n_c, dims_.p) {}

void EulerStepper::step(Eigen::Ref<Vector> x, const Vector& u, const Vector* eps, double t,
                        double dt) {
  model_->drift(x, t, f_);
  model_->control_gain_c(x, t, gain_);
  if (eps != nullptr) model_->diffusion_c(x, t, diffusion_);

  x += dt * f_;
  x.tail(dims_.n_c).noalias() += dt * (gain_ * u);
  if (eps != nullptr) x.tail(dims_.n_c).noalias() += std::sqrt(dt) * (diffusion_ * *eps);
}

}  // namespace mppi

namespace mppi {

ControlSequence::ControlSequence(std::vector<Vector> controls, double dt, double start_time)
    : controls_(std::move(controls)), dt_(dt), start_time_(start_time) {
  if (controls_.empty()) throw std::invalid_argument("ControlSequence: needs at least one step");
  if (!(dt > 0.0)) throw std::invalid_argument("ControlSequence: dt must be positive");
  const Index m = controls_.front().size();
  for (const Vector& u : controls_) {
    if (u.size() != m) throw std::invalid_argument("ControlSequence: ragged controls");
    if (!u.allFinite()) throw std::invalid_argument("ControlSequence: non-finite control");
  }
}

ControlSequence ControlSequence::constant(Index steps, const Vector& value, double dt,
                                          double start_time) {
  if (steps < 1) throw std::invalid_argument("ControlSequence: needs at least one step");
  return {std::vector<Vector>(static_cast<std::size_t>(steps), value), dt, start_time};
}

void ControlSequence::clamp(const Vector& lo, const Vector& hi) {
  for (Vector& u : controls_) u = u.cwiseMax(lo).cwiseMin(hi);
}

void ControlSequence::shift(const Vector& fill) {
  for (std::size_t i = 0; i + 1 < controls_.size(); ++i) std::swap(controls_[i], controls_[i + 1]);
  controls_.back() = fill;
  start_time_ += dt_;
}

}  // namespace mppi

namespace mppi {

FunctionalDiffusionModel::FunctionalDiffusionModel(Partition dims, DriftFn drift, BlockFn gain_c,
                                                   BlockFn diffusion_c, std::optional<double> rho)
    : dims_(dims),
      drift_(std::move(drift)),
      gain_c_(std::move(gain_c)),
      diffusion_c_(std::move(diffusion_c)),
      rho_(rho) {}

FunctionalDiffusionModel FunctionalDiffusionModel::linear(Index n_a, const Matrix& drift_matrix,
                                                          const Matrix& gain_c,
                                                          const Matrix& diffusion_c) {
  const Index n = drift_matrix.rows();
  if (drift_matrix.cols() != n || gain_c.rows() != n - n_a || diffusion_c.rows() != n - n_a)
    throw std::invalid_argument("FunctionalDiffusionModel::linear: inconsistent shapes");
  Partition dims{n_a, n - n_a, gain_c.cols(), diffusion_c.cols()};
  return {dims, [drift_matrix](const Vector& x, double) -> Vector { return drift_matrix * x; },
          [gain_c](const Vector&, double) -> Matrix { return gain_c; },
          [diffusion_c](const Vector&, double) -> Matrix { return diffusion_c; }};
}

void FunctionalDiffusionModel::drift(const VectorCRef& x, double t, Eigen::Ref<Vector> out) const {
  out = drift_(x, t);
}

void FunctionalDiffusionModel::control_gain_c(const VectorCRef& x, double t,
                                              Eigen::Ref<Matrix> out) const {
  out = gain_c_(x, t);
}

void FunctionalDiffusionModel::diffusion_c(const VectorCRef& x, double t,
                                           Eigen::Ref<Matrix> out) const {
  out = diffusion_c_(x, t);
}

}  // namespace mppi
