#include "mppi/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mppi {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw UsageError("expected a finite number, got '" + s + "'");
  return v;
}

long long parse_integer(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw UsageError("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw UsageError("expected true or false, got '" + s + "'");
}

/// Comma list of integers; "a..b" expands to the inclusive range.
std::vector<long long> parse_integer_list(const std::string& s) {
  std::vector<long long> out;
  for (const std::string& item : split(s, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_integer(item));
      continue;
    }
    const long long lo = parse_integer(trim(item.substr(0, dots)));
    const long long hi = parse_integer(trim(item.substr(dots + 2)));
    if (hi < lo || hi - lo > 1000000) throw UsageError("bad range '" + item + "'");
    for (long long v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split(s, ',')) out.push_back(parse_double(item));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

TaskKind parse_task(const std::string& s) {
  if (s == "cartpole") return TaskKind::cartpole;
  if (s == "racecar") return TaskKind::racecar;
  if (s == "quadrotor") return TaskKind::quadrotor;
  if (s == "fk-verify") return TaskKind::fk_verify;
  if (s == "ratio-verify") return TaskKind::ratio_verify;
  throw UsageError("unknown task '" + s + "'");
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "mppi") return Algorithm::mppi;
  if (s == "ddp") return Algorithm::ddp;
  throw UsageError("unknown algorithm '" + s + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

Setter real(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_double(v); };
}

template <class Params>
Setter real_in(Params ExperimentConfig::*group, double Params::*field) {
  return [group, field](ExperimentConfig& c, const std::string& v) {
    (c.*group).*field = parse_double(v);
  };
}

Setter integer(int ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& v) {
    c.*field = static_cast<int>(parse_integer(v));
  };
}

Setter flag(bool ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_bool(v); };
}

Setter optional_real(std::optional<double> ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_double(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["task"] = [](ExperimentConfig&, const std::string&) {};
    t["algorithm"] = [](ExperimentConfig& c, const std::string& v) {
      c.algorithms.clear();
      for (const std::string& a : split(v, ',')) c.algorithms.push_back(parse_algorithm(a));
      if (c.algorithms.empty()) throw UsageError("empty algorithm list");
    };
    t["sweep.nu"] = [](ExperimentConfig& c, const std::string& v) { c.nus = parse_double_list(v); };
    t["sweep.K"] = [](ExperimentConfig& c, const std::string& v) {
      c.rollouts.clear();
      for (long long k : parse_integer_list(v)) c.rollouts.push_back(static_cast<Index>(k));
    };
    t["sweep.seeds"] = [](ExperimentConfig& c, const std::string& v) {
      c.seeds.clear();
      for (long long s : parse_integer_list(v)) {
        if (s < 0) throw UsageError("seeds must be non-negative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    };

    t["run.duration"] = real(&ExperimentConfig::duration);
    t["run.horizon"] = real(&ExperimentConfig::horizon);
    t["run.control_rate"] = real(&ExperimentConfig::control_rate);
    t["run.plant_noise"] = flag(&ExperimentConfig::plant_noise);
    t["output.dir"] = [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; };
    t["report.cost_cap"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "none")
        c.cost_cap.reset();
      else
        c.cost_cap = parse_double(v);
    };
    t["report.upright_window"] = real(&ExperimentConfig::upright_window);
    t["report.corner_threshold"] = real(&ExperimentConfig::corner_threshold);

    t["mppi.lambda"] = real(&ExperimentConfig::lambda);
    t["mppi.R"] = real(&ExperimentConfig::control_cost);
    t["mppi.u_init"] = optional_real(&ExperimentConfig::u_init);
    t["mppi.penalty_cost"] = real(&ExperimentConfig::penalty_cost);
    t["mppi.iterations"] = integer(&ExperimentConfig::iterations);
    t["mppi.strict_lambda"] = flag(&ExperimentConfig::strict_lambda);

    t["ddp.R"] = optional_real(&ExperimentConfig::ddp_control_cost);
    t["ddp.u_ref"] = optional_real(&ExperimentConfig::u_ref);
    t["ddp.max_iterations"] = integer(&ExperimentConfig::ddp_max_iterations);
    t["ddp.mu_init"] = real(&ExperimentConfig::mu_init);
    t["ddp.mu_min"] = real(&ExperimentConfig::mu_min);
    t["ddp.mu_max"] = real(&ExperimentConfig::mu_max);
    t["ddp.mu_growth"] = real(&ExperimentConfig::mu_growth);
    t["ddp.tolerance"] = real(&ExperimentConfig::ddp_tolerance);
    t["ddp.proximity"] = real(&ExperimentConfig::proximity);

    using C = ExperimentConfig;
    t["cartpole.length"] = real_in(&C::cartpole, &CartPoleParams::length);
    t["cartpole.gravity"] = real_in(&C::cartpole, &CartPoleParams::gravity);
    t["cartpole.velocity_gain"] = real_in(&C::cartpole, &CartPoleParams::velocity_gain);
    t["cartpole.inv_sqrt_rho"] = real_in(&C::cartpole, &CartPoleParams::inv_sqrt_rho);
    t["cartpole.u_max"] = real_in(&C::cartpole, &CartPoleParams::u_max);

    t["racecar.mass"] = real_in(&C::racecar, &RaceCarParams::mass);
    t["racecar.yaw_inertia"] = real_in(&C::racecar, &RaceCarParams::yaw_inertia);
    t["racecar.lf"] = real_in(&C::racecar, &RaceCarParams::lf);
    t["racecar.lr"] = real_in(&C::racecar, &RaceCarParams::lr);
    t["racecar.gravity"] = real_in(&C::racecar, &RaceCarParams::gravity);
    t["racecar.friction"] = real_in(&C::racecar, &RaceCarParams::friction);
    t["racecar.tire_b"] = real_in(&C::racecar, &RaceCarParams::tire_b);
    t["racecar.tire_c"] = real_in(&C::racecar, &RaceCarParams::tire_c);
    t["racecar.max_drive"] = real_in(&C::racecar, &RaceCarParams::max_drive);
    t["racecar.drag"] = real_in(&C::racecar, &RaceCarParams::drag);
    t["racecar.rolling"] = real_in(&C::racecar, &RaceCarParams::rolling);
    t["racecar.max_steer"] = real_in(&C::racecar, &RaceCarParams::max_steer);
    t["racecar.actuator_rate"] = real_in(&C::racecar, &RaceCarParams::actuator_rate);
    t["racecar.slip_speed_floor"] = real_in(&C::racecar, &RaceCarParams::slip_speed_floor);
    t["racecar.inv_sqrt_rho"] = real_in(&C::racecar, &RaceCarParams::inv_sqrt_rho);
    t["racecar.semi_major"] = real_in(&C::racecar, &RaceCarParams::semi_major);
    t["racecar.semi_minor"] = real_in(&C::racecar, &RaceCarParams::semi_minor);
    t["racecar.target_speed"] = real_in(&C::racecar, &RaceCarParams::target_speed);
    t["racecar.initial_speed"] = real_in(&C::racecar, &RaceCarParams::initial_speed);

    t["quadrotor.mass"] = real_in(&C::quadrotor, &QuadrotorParams::mass);
    t["quadrotor.arm"] = real_in(&C::quadrotor, &QuadrotorParams::arm);
    t["quadrotor.inertia_xx"] = real_in(&C::quadrotor, &QuadrotorParams::inertia_xx);
    t["quadrotor.inertia_yy"] = real_in(&C::quadrotor, &QuadrotorParams::inertia_yy);
    t["quadrotor.inertia_zz"] = real_in(&C::quadrotor, &QuadrotorParams::inertia_zz);
    t["quadrotor.gravity"] = real_in(&C::quadrotor, &QuadrotorParams::gravity);
    t["quadrotor.yaw_moment"] = real_in(&C::quadrotor, &QuadrotorParams::yaw_moment);
    t["quadrotor.rotor_rate"] = real_in(&C::quadrotor, &QuadrotorParams::rotor_rate);
    t["quadrotor.drag"] = real_in(&C::quadrotor, &QuadrotorParams::drag);
    t["quadrotor.inv_sqrt_rho"] = real_in(&C::quadrotor, &QuadrotorParams::inv_sqrt_rho);
    t["quadrotor.u_min"] = real_in(&C::quadrotor, &QuadrotorParams::u_min);
    t["quadrotor.u_max"] = real_in(&C::quadrotor, &QuadrotorParams::u_max);

    t["course.start_x"] = real_in(&C::course, &QuadrotorCourse::start_x);
    t["course.start_y"] = real_in(&C::course, &QuadrotorCourse::start_y);
    t["course.start_z"] = real_in(&C::course, &QuadrotorCourse::start_z);
    t["course.goal_x"] = real_in(&C::course, &QuadrotorCourse::goal_x);
    t["course.goal_y"] = real_in(&C::course, &QuadrotorCourse::goal_y);
    t["course.altitude"] = real_in(&C::course, &QuadrotorCourse::altitude);
    t["course.ground"] = real_in(&C::course, &QuadrotorCourse::ground);
    t["course.goal_radius"] = real_in(&C::course, &QuadrotorCourse::goal_radius);

    t["forest.spacing"] = real(&ExperimentConfig::forest_spacing);
    t["forest.seed"] = [](ExperimentConfig& c, const std::string& v) {
      const long long s = parse_integer(v);
      if (s < 0) throw UsageError("forest.seed must be non-negative");
      c.forest_seed = static_cast<std::uint64_t>(s);
    };
    t["forest.x_min"] = real_in(&C::forest_bounds, &ForestBounds::x_min);
    t["forest.x_max"] = real_in(&C::forest_bounds, &ForestBounds::x_max);
    t["forest.y_min"] = real_in(&C::forest_bounds, &ForestBounds::y_min);
    t["forest.y_max"] = real_in(&C::forest_bounds, &ForestBounds::y_max);
    t["forest.radius"] = real_in(&C::forest_options, &ForestOptions::radius);
    t["forest.jitter"] = real_in(&C::forest_options, &ForestOptions::jitter);
    t["forest.clearance"] = real_in(&C::forest_options, &ForestOptions::clearance);
    t["forest.file"] = [](ExperimentConfig& c, const std::string& v) { c.forest_file = v; };
    return t;
  }();
  return table;
}

}  // namespace

const std::string* KeyValues::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw UsageError("line " + std::to_string(line) + ": expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw UsageError("line " + std::to_string(line) + ": empty key");
    if (kv.find(key) != nullptr)
      throw UsageError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    kv.entries.emplace_back(std::move(key), std::move(value));
    kv.lines.push_back(line);
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) { return parse_key_values(read_file(path)); }

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::cartpole: return "cartpole";
    case TaskKind::racecar: return "racecar";
    case TaskKind::quadrotor: return "quadrotor";
    case TaskKind::fk_verify: return "fk-verify";
    case TaskKind::ratio_verify: return "ratio-verify";
  }
  return "unknown";
}

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::mppi ? "mppi" : "ddp";
}

Index ExperimentConfig::horizon_steps() const {
  return static_cast<Index>(std::llround(horizon * control_rate));
}

void ExperimentConfig::validate() const {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("config: " + what);
  };
  require(!algorithms.empty() && !nus.empty() && !rollouts.empty() && !seeds.empty(),
          "sweep lists must be non-empty");
  require(std::all_of(nus.begin(), nus.end(), [](double v) { return v >= 1.0; }),
          "every nu must be at least 1");
  require(std::all_of(rollouts.begin(), rollouts.end(), [](Index k) { return k >= 1; }),
          "every K must be at least 1");
  require(control_rate > 0.0, "run.control_rate must be positive");
  require(horizon > 0.0 && horizon_steps() >= 1, "run.horizon must cover at least one step");
  require(std::abs(horizon * control_rate - static_cast<double>(horizon_steps())) < 1e-9,
          "run.horizon must be a whole number of control periods");
  require(duration >= horizon, "run.duration must be at least run.horizon");
  require(lambda > 0.0, "mppi.lambda must be positive");
  require(control_cost > 0.0, "mppi.R must be positive");
  require(!ddp_control_cost || *ddp_control_cost > 0.0, "ddp.R must be positive");
  require(iterations >= 1 && ddp_max_iterations >= 1, "iteration counts must be positive");
  require(!cost_cap || *cost_cap > 0.0, "report.cost_cap must be positive");
  require(forest_spacing > 0.0, "forest.spacing must be positive");
}

ExperimentConfig default_config(TaskKind task) {
  ExperimentConfig c;
  c.task = task;
  switch (task) {
    case TaskKind::cartpole:
      c.lambda = 10.0;
      c.control_cost = 1.0;
      c.duration = 10.0;
      break;
    case TaskKind::racecar:
      c.nus = {50.0};
      c.lambda = 0.03;
      c.control_cost = 1.0;
      c.duration = 15.0;
      c.cost_cap = 25.0;
      break;
    case TaskKind::quadrotor:
      c.nus = {100.0};
      c.lambda = 10.0;
      c.control_cost = 1.0;
      c.duration = 60.0;
      c.u_init = 1.0;  // hover
      break;
    case TaskKind::fk_verify:
    case TaskKind::ratio_verify:
      break;
  }
  return c;
}

ExperimentConfig experiment_config(const KeyValues& kv) {
  const std::string* task = kv.find("task");
  if (task == nullptr) throw UsageError("config: missing required key 'task'");
  ExperimentConfig c = default_config(parse_task(*task));
  const auto& table = setters();
  for (std::size_t i = 0; i < kv.entries.size(); ++i) {
    const auto& [key, value] = kv.entries[i];
    const std::string where =
        i < kv.lines.size() ? "line " + std::to_string(kv.lines[i]) + ": " : std::string();
    const auto it = table.find(key);
    if (it == table.end()) throw UsageError(where + "unknown key '" + key + "'");
    try {
      it->second(c, value);
    } catch (const UsageError& e) {
      throw UsageError(where + key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace mppi
