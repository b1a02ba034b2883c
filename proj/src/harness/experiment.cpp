#include "mppi/harness/experiment.hpp"

#include "mppi/controller.hpp"
#include "mppi/ddp/ddp.hpp"
#include "mppi/ddp/smooth_cost.hpp"
#include "mppi/env/cartpole.hpp"
#include "mppi/env/quadrotor.hpp"
#include "mppi/env/racecar.hpp"
#include "mppi/harness/csv.hpp"
#include "mppi/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mppi {

std::vector<GridCell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (Algorithm a : cfg.algorithms) {
    if (a == Algorithm::ddp) {
      for (std::uint64_t s : cfg.seeds) cells.push_back({a, std::nullopt, std::nullopt, s});
      continue;
    }
    for (double nu : cfg.nus)
      for (Index k : cfg.rollouts)
        for (std::uint64_t s : cfg.seeds) cells.push_back({a, nu, k, s});
  }
  return cells;
}

ObstacleForest make_forest(const ExperimentConfig& cfg) {
  if (!cfg.forest_file.empty()) {
    std::ifstream in(cfg.forest_file, std::ios::binary);
    if (!in) throw IoError("cannot read " + cfg.forest_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      return ObstacleForest::from_json(ss.str());
    } catch (const std::exception& e) {
      throw UsageError("forest.file " + cfg.forest_file + ": " + e.what());
    }
  }
  ForestOptions options = cfg.forest_options;
  options.start_x = cfg.course.start_x;
  options.start_y = cfg.course.start_y;
  options.goal_x = cfg.course.goal_x;
  options.goal_y = cfg.course.goal_y;
  try {
    return generate_forest(cfg.forest_spacing, cfg.forest_bounds, cfg.forest_seed, options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("forest: ") + e.what());
  }
}

std::unique_ptr<Task> make_task(const ExperimentConfig& cfg) {
  switch (cfg.task) {
    case TaskKind::cartpole:
      return std::make_unique<CartPoleTask>(cfg.cartpole);
    case TaskKind::racecar:
      return std::make_unique<RaceCarTask>(cfg.racecar);
    case TaskKind::quadrotor:
      return std::make_unique<QuadrotorTask>(make_forest(cfg), cfg.course, cfg.quadrotor);
    case TaskKind::fk_verify:
    case TaskKind::ratio_verify:
      break;
  }
  throw UsageError("task " + to_string(cfg.task) + " has no plant");
}

namespace {

bool upright_for_window(const RunLog& log, double duration, double window) {
  bool any = false;
  for (std::size_t i = 0; i < log.steps(); ++i) {
    if (log.time[i] < duration - window - 1e-9) continue;
    any = true;
    if (!(std::abs(1.0 + std::cos(log.states[i][2])) < 0.1)) return false;
  }
  return any;
}

}  // namespace

RunSummary run_cell(const ExperimentConfig& cfg, const Task& task, const GridCell& cell,
                    RunLog* log_out, WorkerPool* pool) {
  const Index m = task.model().partition().m;
  const Index n = cfg.horizon_steps();
  const double dt = cfg.dt();
  const Vector u_init = cfg.u_init ? Vector::Constant(m, *cfg.u_init) : Vector::Zero(m);

  std::unique_ptr<MpcController> controller;
  std::unique_ptr<EulerStepModel> step_model;
  std::unique_ptr<DdpCost> ddp_cost;
  if (cell.algorithm == Algorithm::mppi) {
    MppiConfig mc;
    mc.rollouts = cell.rollouts.value_or(1000);
    mc.horizon = n;
    mc.dt = dt;
    mc.lambda = cfg.lambda;
    mc.nu = cell.nu.value_or(1.0);
    mc.control_cost = cfg.control_cost * Matrix::Identity(m, m);
    mc.u_init = u_init;
    mc.penalty_cost = cfg.penalty_cost;
    mc.seed = cell.seed;
    mc.iterations = cfg.iterations;
    mc.strict_lambda = cfg.strict_lambda;
    controller = std::make_unique<MppiController>(task, mc, pool);
  } else {
    step_model = std::make_unique<EulerStepModel>(task.model(), dt);
    ddp_cost = smooth_cost_adapter(task, cfg.proximity);
    DdpConfig dc;
    dc.horizon = n;
    dc.dt = dt;
    dc.max_iterations = cfg.ddp_max_iterations;
    dc.mu_init = cfg.mu_init;
    dc.mu_min = cfg.mu_min;
    dc.mu_max = cfg.mu_max;
    dc.mu_growth = cfg.mu_growth;
    dc.tolerance = cfg.ddp_tolerance;
    dc.control_cost = cfg.ddp_control_cost.value_or(cfg.control_cost) * Matrix::Identity(m, m);
    dc.u_ref = cfg.u_ref ? Vector::Constant(m, *cfg.u_ref) : u_init;
    dc.u_init = u_init;
    dc.u_lower = task.control_lower();
    dc.u_upper = task.control_upper();
    controller = std::make_unique<DdpController>(*step_model, *ddp_cost, dc);
  }

  RunOptions options;
  options.duration = cfg.duration;
  options.control_rate = cfg.control_rate;
  options.plant_noise = cfg.plant_noise;
  options.plant_seed = cell.seed;
  options.stop_on_completion = cfg.task == TaskKind::quadrotor;
  options.stop_on_crash = cfg.task == TaskKind::quadrotor;
  options.capture_controller_errors = true;
  RunLog log = run_task(task, *controller, options);

  RunSummary s;
  s.task = task.name();
  s.algorithm = cell.algorithm;
  s.nu = cell.nu;
  s.rollouts = cell.rollouts;
  s.seed = cell.seed;
  s.average_cost = log.average_cost();
  s.reported_cost = cfg.cost_cap ? std::min(s.average_cost, *cfg.cost_cap) : s.average_cost;
  s.crashed = log.crashed;
  s.diverged = log.diverged || !log.controller_error.empty();
  s.goal_task = cfg.task == TaskKind::quadrotor;
  s.completion_time = log.completion_time;
  s.steps = log.steps();
  s.wall_ms_mean = log.mean_wall_ms();
  s.error = log.controller_error;
  if (cfg.task == TaskKind::racecar) {
    const double v = minimum_corner_speed(log.states, cfg.corner_threshold);
    if (!std::isnan(v)) s.corner_speed = v;
  }
  if (cfg.task == TaskKind::cartpole)
    s.upright_final = !s.diverged && upright_for_window(log, cfg.duration, cfg.upright_window);
  if (log_out != nullptr) *log_out = std::move(log);
  return s;
}

bool ExperimentResult::verification_failed() const {
  for (const VerifyCase& c : verify)
    if (!c.passed) return true;
  return false;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
  cfg.validate();
  ExperimentResult result;
  if (cfg.task == TaskKind::fk_verify || cfg.task == TaskKind::ratio_verify) {
    std::ostringstream sink;
    result.verify = run_verify_suite(cfg.task == TaskKind::fk_verify ? "fk" : "ratio", sink);
    return result;
  }

  const std::unique_ptr<Task> task = make_task(cfg);
  const std::vector<GridCell> cells = expand_grid(cfg);
  result.summaries.resize(cells.size());
  result.logs.resize(cells.size());
  workers = std::max<std::size_t>(workers, 1);

  if (workers == 1 || cells.size() == 1) {
    std::unique_ptr<WorkerPool> pool;
    if (workers > 1) pool = std::make_unique<WorkerPool>(workers);
    for (std::size_t i = 0; i < cells.size(); ++i)
      result.summaries[i] = run_cell(cfg, *task, cells[i], &result.logs[i], pool.get());
    return result;
  }

  WorkerPool pool(std::min(workers, cells.size()));
  pool.parallel_for(cells.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      result.summaries[i] = run_cell(cfg, *task, cells[i], &result.logs[i]);
  });
  return result;
}

namespace {

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string clean(std::string text) {
  for (char& ch : text)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return text;
}

std::string short_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<std::string> key_fields(const RunSummary& s) {
  return {s.task, to_string(s.algorithm), optional_field(s.nu),
          s.rollouts ? std::to_string(*s.rollouts) : std::string(), std::to_string(s.seed)};
}

}  // namespace

std::string summary_csv(const std::vector<RunSummary>& summaries) {
  CsvTable t;
  t.header = {"task",           "algorithm",     "nu",       "K",       "seed",
              "average_cost",   "reported_cost", "crashed",  "diverged", "completed",
              "completion_time", "corner_speed", "upright_final", "steps", "error"};
  for (const RunSummary& s : summaries) {
    std::vector<std::string> row = key_fields(s);
    row.push_back(format_double(s.average_cost));
    row.push_back(format_double(s.reported_cost));
    row.push_back(s.crashed ? "1" : "0");
    row.push_back(s.diverged ? "1" : "0");
    row.push_back(!s.goal_task ? "" : s.completion_time ? "1" : "0");
    row.push_back(!s.goal_task         ? std::string()
                  : s.completion_time ? format_double(*s.completion_time)
                                      : std::string("DNF"));
    row.push_back(optional_field(s.corner_speed));
    row.push_back(s.upright_final ? (*s.upright_final ? "1" : "0") : "");
    row.push_back(std::to_string(s.steps));
    row.push_back(clean(s.error));
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

std::string summary_json(const std::vector<RunSummary>& summaries) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  const auto number = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  for (const RunSummary& s : summaries) {
    nlohmann::ordered_json j;
    j["task"] = s.task;
    j["algorithm"] = to_string(s.algorithm);
    j["nu"] = s.nu ? number(*s.nu) : nullptr;
    j["K"] = s.rollouts ? nlohmann::ordered_json(*s.rollouts) : nullptr;
    j["seed"] = s.seed;
    j["average_cost"] = number(s.average_cost);
    j["reported_cost"] = number(s.reported_cost);
    j["crashed"] = s.crashed;
    j["diverged"] = s.diverged;
    j["completed"] = s.goal_task ? nlohmann::ordered_json(s.completion_time.has_value()) : nullptr;
    j["completion_time"] = s.completion_time ? number(*s.completion_time) : nullptr;
    j["corner_speed"] = s.corner_speed ? number(*s.corner_speed) : nullptr;
    j["upright_final"] = s.upright_final ? nlohmann::ordered_json(*s.upright_final) : nullptr;
    j["steps"] = s.steps;
    j["error"] = s.error;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string timing_csv(const std::vector<RunSummary>& summaries) {
  CsvTable t;
  t.header = {"task", "algorithm", "nu", "K", "seed", "steps", "wall_ms_mean"};
  for (const RunSummary& s : summaries) {
    std::vector<std::string> row = key_fields(s);
    row.push_back(std::to_string(s.steps));
    row.push_back(format_double(s.wall_ms_mean));
    t.rows.push_back(std::move(row));
  }
  return to_csv(t);
}

std::string verify_csv(const std::vector<VerifyCase>& cases) {
  CsvTable t;
  t.header = {"case", "passed", "max_error", "tolerance", "detail"};
  for (const VerifyCase& c : cases)
    t.rows.push_back({c.name, c.passed ? "1" : "0", format_double(c.max_error),
                      format_double(c.tolerance), clean(c.detail)});
  return to_csv(t);
}

std::string run_file_name(const RunSummary& s) {
  std::string name = "runs/" + s.task + "_" + to_string(s.algorithm);
  if (s.nu) name += "_nu" + short_number(*s.nu);
  if (s.rollouts) name += "_K" + std::to_string(*s.rollouts);
  return name + "_seed" + std::to_string(s.seed) + ".csv";
}

void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
  const std::string root = out_dir.empty() ? std::string(".") : out_dir;
  if (!result.verify.empty()) {
    write_text_file(root + "/verify.csv", verify_csv(result.verify));
    return;
  }
  write_text_file(root + "/summary.csv", summary_csv(result.summaries));
  write_text_file(root + "/summary.json", summary_json(result.summaries));
  write_text_file(root + "/timing.csv", timing_csv(result.summaries));
  for (std::size_t i = 0; i < result.summaries.size(); ++i)
    write_text_file(root + "/" + run_file_name(result.summaries[i]),
                    to_csv(run_log_table(result.logs[i])));
}

}  // namespace mppi
