#pragma once

#include "mppi/diffusion.hpp"

#include <string>
#include <vector>

namespace mppi {

/// A plant together with its cost, crash rule and reporting conventions.
///
/// All methods are const and must be safe to call concurrently.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual const DiffusionModel& model() const = 0;

  /// State cost q(x); `crashed` is the sticky crash flag.
  virtual double running_cost(const VectorCRef& x, bool crashed) const = 0;
  virtual double terminal_cost(const VectorCRef&) const { return 0.0; }
  virtual bool crash_check(const VectorCRef&) const { return false; }
  /// True once the task goal is reached (ends a closed-loop run early).
  virtual bool completed(const VectorCRef&) const { return false; }

  virtual Vector initial_state() const = 0;
  virtual Vector control_lower() const = 0;
  virtual Vector control_upper() const = 0;

  /// Physical state used for logs; defaults to the internal coordinates.
  virtual Vector report_state(const VectorCRef& x) const { return x; }
  virtual std::vector<std::string> state_names() const = 0;
  virtual std::vector<std::string> control_names() const = 0;
};

}  // namespace mppi
