#include "mppi/env/forest.hpp"

#include "mppi/noise.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mppi {

double ObstacleForest::nearest_surface_distance(double x, double y) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Cylinder& c : cylinders_) {
    const double dx = x - c.x;
    const double dy = y - c.y;
    best = std::min(best, std::sqrt(dx * dx + dy * dy) - c.radius);
  }
  return std::max(best, 0.0);
}

bool ObstacleForest::collides(double x, double y) const {
  return std::any_of(cylinders_.begin(), cylinders_.end(), [&](const Cylinder& c) {
    const double dx = x - c.x;
    const double dy = y - c.y;
    return dx * dx + dy * dy <= c.radius * c.radius;
  });
}

void ObstacleForest::surface_distances_within(double x, double y, double radius,
                                              std::vector<double>& out) const {
  out.clear();
  for (const Cylinder& c : cylinders_) {
    const double d = std::max(std::hypot(x - c.x, y - c.y) - c.radius, 0.0);
    if (d <= radius) out.push_back(d);
  }
}

std::string ObstacleForest::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const Cylinder& c : cylinders_) doc.push_back({{"x", c.x}, {"y", c.y}, {"radius", c.radius}});
  return doc.dump(2);
}

ObstacleForest ObstacleForest::from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.is_array()) throw std::invalid_argument("forest JSON must be a list of cylinders");
  std::vector<Cylinder> cylinders;
  for (const auto& item : doc)
    cylinders.push_back({item.at("x").get<double>(), item.at("y").get<double>(),
                         item.at("radius").get<double>()});
  return ObstacleForest(std::move(cylinders));
}

ObstacleForest generate_forest(double spacing, const ForestBounds& bounds, std::uint64_t seed,
                               const ForestOptions& options) {
  if (!(spacing > 0.0)) throw std::invalid_argument("generate_forest: spacing must be positive");
  if (!(options.jitter >= 0.0 && options.jitter < 0.5))
    throw std::invalid_argument("generate_forest: jitter must lie in [0, 0.5)");
  const double width = bounds.x_max - bounds.x_min;
  const double height = bounds.y_max - bounds.y_min;
  if (!(width >= spacing) || !(height >= spacing))
    throw std::invalid_argument("generate_forest: bounds must hold at least one cell");

  const auto nx = static_cast<std::uint64_t>(std::floor(width / spacing + 1e-9));
  const auto ny = static_cast<std::uint64_t>(std::floor(height / spacing + 1e-9));
  const double x0 = bounds.x_min + 0.5 * (width - static_cast<double>(nx) * spacing);
  const double y0 = bounds.y_min + 0.5 * (height - static_cast<double>(ny) * spacing);
  const NoiseStream random(derive_seed(seed, 0x666f72657374ULL), 1);
  const double keep_out = options.radius + options.clearance;

  std::vector<Cylinder> cylinders;
  for (std::uint64_t i = 0; i < nx; ++i) {
    for (std::uint64_t j = 0; j < ny; ++j) {
      const double jx = (2.0 * random.uniform(i, j, 0) - 1.0) * options.jitter * spacing;
      const double jy = (2.0 * random.uniform(i, j, 1) - 1.0) * options.jitter * spacing;
      const Cylinder c{x0 + (static_cast<double>(i) + 0.5) * spacing + jx,
                       y0 + (static_cast<double>(j) + 0.5) * spacing + jy, options.radius};
      if (std::hypot(c.x - options.start_x, c.y - options.start_y) < keep_out) continue;
      if (std::hypot(c.x - options.goal_x, c.y - options.goal_y) < keep_out) continue;
      cylinders.push_back(c);
    }
  }
  return ObstacleForest(std::move(cylinders));
}

}  // namespace mppi
