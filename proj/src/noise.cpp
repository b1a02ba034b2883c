#include "mppi/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mppi {

namespace {

std::uint64_t counter_key(std::uint64_t seed, std::uint64_t k, std::uint64_t i, std::uint64_t j) {
  std::uint64_t h = mix64(seed ^ 0xd1b54a32d192ed03ULL);
  h = mix64(h ^ k);
  h = mix64(h ^ (i * 0x9e3779b97f4a7c15ULL));
  return mix64(h ^ (j * 0xc2b2ae3d27d4eb4fULL));
}

std::uint64_t row_key(std::uint64_t seed, std::uint64_t k) {
  return mix64(mix64(seed ^ 0x8bb84b93962eacc9ULL) ^ k);
}

// Box-Muller pair number `pair` of row k; the normals of element t = i dim + j
// are (cos, sin) of pair t / 2.
void gaussian_pair(std::uint64_t row, std::uint64_t pair, double& c, double& s) {
  const std::uint64_t key = mix64(row ^ (pair * 0x9e3779b97f4a7c15ULL));
  const double u1 = 1.0 - to_unit_interval(key);  // (0, 1]
  const double u2 = to_unit_interval(mix64(key));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  c = radius * std::cos(angle);
  s = radius * std::sin(angle);
}

void fill(std::uint64_t row, std::uint64_t first, std::span<double> out) {
  std::size_t pos = 0;
  std::uint64_t t = first;
  double c = 0.0;
  double s = 0.0;
  if (t % 2 == 1 && pos < out.size()) {
    gaussian_pair(row, t / 2, c, s);
    out[pos++] = s;
    ++t;
  }
  for (; pos + 1 < out.size(); pos += 2, t += 2) {
    gaussian_pair(row, t / 2, c, s);
    out[pos] = c;
    out[pos + 1] = s;
  }
  if (pos < out.size()) {
    gaussian_pair(row, t / 2, c, s);
    out[pos] = c;
  }
}

}  // namespace

void NoiseStream::draw(std::uint64_t k, std::uint64_t i, std::span<double> out) const {
  if (static_cast<Index>(out.size()) != dim_)
    throw std::invalid_argument("NoiseStream::draw: output size mismatch");
  fill(row_key(seed_, k), i * static_cast<std::uint64_t>(dim_), out);
}

void NoiseStream::draw_steps(std::uint64_t k, std::uint64_t first_step, std::span<double> out) const {
  if (out.size() % static_cast<std::size_t>(dim_) != 0)
    throw std::invalid_argument("NoiseStream::draw_steps: output size is not a multiple of dim");
  fill(row_key(seed_, k), first_step * static_cast<std::uint64_t>(dim_), out);
}

Vector NoiseStream::draw(std::uint64_t k, std::uint64_t i) const {
  Vector out(dim_);
  draw(k, i, std::span<double>(out.data(), static_cast<std::size_t>(dim_)));
  return out;
}

double NoiseStream::uniform(std::uint64_t k, std::uint64_t i, std::uint64_t j) const {
  return to_unit_interval(mix64(counter_key(seed_, k, i, j) ^ 0xa0761d6478bd642fULL));
}

}  // namespace mppi
