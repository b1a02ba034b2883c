#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mppi {

struct Cylinder {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.5;
  bool operator==(const Cylinder&) const = default;
};

struct ForestBounds {
  double x_min = 0.0;
  double x_max = 20.0;
  double y_min = 0.0;
  double y_max = 20.0;
};

struct ForestOptions {
  double radius = 0.5;
  double jitter = 0.4;     // fraction of the cell size
  double clearance = 1.5;  // free space around start and goal, from the cylinder surface
  double start_x = 0.0;
  double start_y = 10.0;
  double goal_x = 20.0;
  double goal_y = 10.0;
};

/// Vertical cylinders of infinite height. Immutable after construction.
class ObstacleForest {
 public:
  ObstacleForest() = default;
  explicit ObstacleForest(std::vector<Cylinder> cylinders) : cylinders_(std::move(cylinders)) {}

  const std::vector<Cylinder>& cylinders() const { return cylinders_; }
  std::size_t size() const { return cylinders_.size(); }

  /// Distance from (x, y) to the nearest cylinder surface, floored at 0.
  /// Infinity for an empty forest.
  double nearest_surface_distance(double x, double y) const;
  /// True when (x, y) is on or inside some cylinder.
  bool collides(double x, double y) const;
  /// Surface distances of cylinders whose surface is within `radius` of (x, y).
  void surface_distances_within(double x, double y, double radius, std::vector<double>& out) const;

  std::string to_json() const;
  static ObstacleForest from_json(const std::string& text);

  bool operator==(const ObstacleForest&) const = default;

 private:
  std::vector<Cylinder> cylinders_;
};

/// Jittered grid with cell size `spacing`, centered in `bounds`; cylinders
/// within `clearance` of the start or goal are dropped. Pure in its inputs.
///
/// Throws std::invalid_argument for non-positive spacing, bounds smaller than
/// one cell, or jitter outside [0, 0.5).
ObstacleForest generate_forest(double spacing, const ForestBounds& bounds, std::uint64_t seed,
                               const ForestOptions& options = {});

}  // namespace mppi
