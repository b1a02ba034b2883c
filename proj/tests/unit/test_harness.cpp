#include "mppi/harness/config.hpp"
#include "mppi/harness/csv.hpp"
#include "mppi/harness/experiment.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace mppi {
namespace {

namespace fs = std::filesystem;

ExperimentConfig config_from(const std::string& text) {
  return experiment_config(parse_key_values(text));
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mppi_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyGrid =
    "task = cartpole\n"
    "algorithm = mppi\n"
    "sweep.nu = 1, 1500\n"
    "sweep.K = 10, 20\n"
    "sweep.seeds = 0..2\n"
    "run.duration = 0.2\n"
    "run.horizon = 0.1\n";

TEST(KeyValues, CommentsBlanksAndOrder) {
  const KeyValues kv = parse_key_values("# heading\n\n a = 1 \nb=two words\n  # indented\nc = 3\n");
  ASSERT_EQ(kv.entries.size(), 3u);
  EXPECT_EQ(kv.entries[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(*kv.find("b"), "two words");
  EXPECT_EQ(kv.lines[2], 6);
  EXPECT_EQ(kv.find("missing"), nullptr);
}

TEST(KeyValues, MalformedInputIsAUsageError) {
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), UsageError);
  EXPECT_THROW(parse_key_values("no equals sign\n"), UsageError);
  EXPECT_THROW(parse_key_values(" = 3\n"), UsageError);
  EXPECT_THROW(read_key_values("/nonexistent/dir/file.cfg"), IoError);
}

TEST(Config, ParsesSweepsAndOverrides) {
  const ExperimentConfig c = config_from(
      "task = racecar\nalgorithm = mppi, ddp\nsweep.nu = 50, 100\nsweep.K = 100\n"
      "sweep.seeds = 3..5, 9\nreport.cost_cap = 25\nracecar.friction = 0.8\nmppi.lambda = 0.5\n");
  EXPECT_EQ(c.task, TaskKind::racecar);
  EXPECT_EQ(c.algorithms, (std::vector<Algorithm>{Algorithm::mppi, Algorithm::ddp}));
  EXPECT_EQ(c.nus, (std::vector<double>{50, 100}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4, 5, 9}));
  ASSERT_TRUE(c.cost_cap.has_value());
  EXPECT_EQ(*c.cost_cap, 25.0);
  EXPECT_EQ(c.racecar.friction, 0.8);
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.horizon_steps(), 50);
}

TEST(Config, TaskDefaultsApply) {
  const ExperimentConfig q = config_from("task = quadrotor\n");
  ASSERT_TRUE(q.u_init.has_value());
  EXPECT_EQ(*q.u_init, 1.0);
  const ExperimentConfig c = config_from("task = cartpole\n");
  EXPECT_FALSE(c.cost_cap.has_value());
  EXPECT_EQ(c.seeds.size(), 10u);
}

TEST(Config, ErrorsNameTheProblem) {
  const auto message = [](const std::string& text) {
    try {
      config_from(text);
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("sweep.nu = 1\n").find("task"), std::string::npos);
  EXPECT_NE(message("task = cartpole\nbogus.key = 1\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("task = juggling\n"), "");
  EXPECT_NE(message("task = cartpole\nalgorithm = pid\n"), "");
  EXPECT_NE(message("task = cartpole\nsweep.nu = abc\n"), "");
  EXPECT_NE(message("task = cartpole\nrun.duration = 0.5\nrun.horizon = 1\n"), "");
  EXPECT_NE(message("task = cartpole\nsweep.nu = 0.5\n"), "");
  EXPECT_NE(message("task = cartpole\nsweep.K = 0\n"), "");
}

TEST(Config, EveryListedKeyIsAccepted) {
  const std::vector<std::string> keys = config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_NE(std::find(keys.begin(), keys.end(), "mppi.lambda"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "sweep.nu"), keys.end());
}

TEST(Grid, CartesianProductCount) {
  ExperimentConfig c = config_from(
      "task = cartpole\nsweep.nu = 1, 1500\nsweep.K = 10, 1000\nsweep.seeds = 0, 1, 2\n");
  EXPECT_EQ(expand_grid(c).size(), 12u);
  c.algorithms = {Algorithm::mppi, Algorithm::ddp};
  const auto cells = expand_grid(c);
  ASSERT_EQ(cells.size(), 15u);
  EXPECT_FALSE(cells.back().nu.has_value());
  EXPECT_EQ(cells.back().algorithm, Algorithm::ddp);
  EXPECT_EQ(*cells.front().nu, 1.0);
  EXPECT_EQ(*cells.front().rollouts, 10);
}

TEST(Csv, DoublesRoundTripBitExactly) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    const double v = std::bit_cast<double>(bits(rng));
    if (std::isnan(v)) continue;
    EXPECT_EQ(std::bit_cast<std::uint64_t>(parse_csv_double(format_double(v))),
              std::bit_cast<std::uint64_t>(v));
  }
  EXPECT_TRUE(std::isnan(parse_csv_double(format_double(std::nan("")))));
  EXPECT_EQ(parse_csv_double(format_double(-HUGE_VAL)), -HUGE_VAL);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_THROW(parse_csv_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_csv_double(""), std::invalid_argument);
}

TEST(Csv, TableRoundTrip) {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x"}, {"", "2.5"}};
  const CsvTable back = parse_csv(to_csv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("b"), 1u);
  EXPECT_THROW(back.column("c"), std::out_of_range);
  EXPECT_THROW(parse_csv("a,b\n1\n"), std::invalid_argument);
}

TEST(RunOutputs, FiveHundredStepsGiveFiveHundredAndOneLines) {
  const ExperimentConfig cfg = config_from(
      "task = cartpole\nsweep.nu = 1500\nsweep.K = 5\nsweep.seeds = 0\nrun.duration = 10\n"
      "run.horizon = 0.1\n");
  const auto task = make_task(cfg);
  RunLog log;
  const RunSummary s = run_cell(cfg, *task, expand_grid(cfg).front(), &log);
  EXPECT_EQ(s.steps, 500u);
  const std::string text = to_csv(run_log_table(log));
  EXPECT_EQ(count_lines(text), 501u);

  const CsvTable back = parse_csv(text);
  ASSERT_EQ(back.rows.size(), 500u);
  EXPECT_EQ(back.header.front(), "t");
  EXPECT_EQ(back.header.back(), "running_cost");
  const std::size_t theta = back.column("theta");
  for (std::size_t i = 0; i < 500; ++i) {
    EXPECT_EQ(parse_csv_double(back.rows[i][theta]), log.states[i][2]);
    EXPECT_EQ(parse_csv_double(back.rows[i].back()), log.running_cost[i]);
  }
}

TEST(RunOutputs, SummaryOfTwelveRunsHasThirteenLines) {
  const ExperimentConfig cfg = config_from(kTinyGrid);
  const ExperimentResult r = run_experiment(cfg, 1);
  ASSERT_EQ(r.summaries.size(), 12u);
  EXPECT_EQ(count_lines(summary_csv(r.summaries)), 13u);
  for (const RunSummary& s : r.summaries) {
    EXPECT_GE(s.average_cost, 0.0);
    EXPECT_FALSE(s.goal_task);
    EXPECT_EQ(s.steps, 10u);
  }
}

TEST(RunOutputs, CostCapLimitsReportedCost) {
  const ExperimentConfig cfg = config_from(
      "task = cartpole\nsweep.nu = 1\nsweep.K = 5\nsweep.seeds = 0\nrun.duration = 0.2\n"
      "run.horizon = 0.1\nreport.cost_cap = 25\n");
  const auto task = make_task(cfg);
  const RunSummary s = run_cell(cfg, *task, expand_grid(cfg).front());
  EXPECT_GT(s.average_cost, 25.0);
  EXPECT_EQ(s.reported_cost, 25.0);
  EXPECT_NE(summary_csv({s}).find(",25,"), std::string::npos);
}

TEST(RunOutputs, ResultsDoNotDependOnWorkerCount) {
  const ExperimentConfig cfg = config_from(kTinyGrid);
  const ExperimentResult a = run_experiment(cfg, 1);
  const ExperimentResult b = run_experiment(cfg, 3);
  EXPECT_EQ(summary_csv(a.summaries), summary_csv(b.summaries));
  EXPECT_EQ(summary_json(a.summaries), summary_json(b.summaries));
  ASSERT_EQ(a.logs.size(), b.logs.size());
  for (std::size_t i = 0; i < a.logs.size(); ++i)
    EXPECT_EQ(to_csv(run_log_table(a.logs[i])), to_csv(run_log_table(b.logs[i])));
}

TEST(RunOutputs, SingleCellEqualsGridCell) {
  const ExperimentConfig grid = config_from(kTinyGrid);
  const ExperimentResult all = run_experiment(grid, 2);
  const ExperimentConfig one = config_from(
      "task = cartpole\nsweep.nu = 1500\nsweep.K = 20\nsweep.seeds = 1\nrun.duration = 0.2\n"
      "run.horizon = 0.1\n");
  const ExperimentResult single = run_experiment(one, 1);
  ASSERT_EQ(single.summaries.size(), 1u);
  const RunSummary& s = single.summaries[0];
  bool found = false;
  for (std::size_t i = 0; i < all.summaries.size(); ++i) {
    const RunSummary& g = all.summaries[i];
    if (*g.nu != 1500.0 || *g.rollouts != 20 || g.seed != 1) continue;
    found = true;
    EXPECT_EQ(g.average_cost, s.average_cost);
    EXPECT_EQ(to_csv(run_log_table(all.logs[i])), to_csv(run_log_table(single.logs[0])));
  }
  EXPECT_TRUE(found);
}

TEST(RunOutputs, WriteOutputsLaysOutFiles) {
  const fs::path dir = scratch("write");
  const ExperimentConfig cfg = config_from(
      "task = cartpole\nalgorithm = mppi, ddp\nsweep.nu = 10\nsweep.K = 5\nsweep.seeds = 0\n"
      "run.duration = 0.1\nrun.horizon = 0.04\n");
  const ExperimentResult r = run_experiment(cfg, 1);
  write_outputs(r, dir.string());
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  EXPECT_EQ(run_file_name(r.summaries[0]), "runs/cartpole_mppi_nu10_K5_seed0.csv");
  EXPECT_EQ(run_file_name(r.summaries[1]), "runs/cartpole_ddp_seed0.csv");
  EXPECT_TRUE(fs::exists(dir / "runs/cartpole_ddp_seed0.csv"));
  const CsvTable summary = read_csv((dir / "summary.csv").string());
  EXPECT_EQ(summary.rows.size(), 2u);
  EXPECT_THROW(write_outputs(r, "/proc/mppi_forbidden/out"), IoError);
}

class Cli : public ::testing::Test {
 protected:
  static int exit_code(const std::string& args) {
    const std::string cmd = std::string(MPPI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

TEST_F(Cli, RunSucceedsAndIsByteIdentical) {
  const fs::path dir = scratch("cli_run");
  {
    std::ofstream(dir / "grid.cfg") << kTinyGrid;
  }
  const std::string cfg = (dir / "grid.cfg").string();
  ASSERT_EQ(exit_code("run --config " + cfg + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(exit_code("run --config " + cfg + " --out " + (dir / "b").string() + " --workers 4"), 0);
  EXPECT_EQ(slurp(dir / "a/summary.csv"), slurp(dir / "b/summary.csv"));
  EXPECT_EQ(slurp(dir / "a/summary.json"), slurp(dir / "b/summary.json"));
  EXPECT_EQ(slurp(dir / "a/runs/cartpole_mppi_nu1500_K20_seed2.csv"),
            slurp(dir / "b/runs/cartpole_mppi_nu1500_K20_seed2.csv"));
  EXPECT_EQ(count_lines(slurp(dir / "a/summary.csv")), 13u);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  const fs::path dir = scratch("cli_usage");
  {
    std::ofstream(dir / "bad.cfg") << "task = cartpole\nnot.a.key = 1\n";
    std::ofstream(dir / "badtask.cfg") << "task = juggling\n";
  }
  EXPECT_EQ(exit_code(""), 2);
  EXPECT_EQ(exit_code("launch"), 2);
  EXPECT_EQ(exit_code("run"), 2);
  EXPECT_EQ(exit_code("run --config " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(exit_code("run --config " + (dir / "badtask.cfg").string()), 2);
  EXPECT_EQ(exit_code("verify --suite nonsense"), 2);
  EXPECT_EQ(exit_code("forest --spacing -1 --seed 0 --out " + (dir / "f.json").string()), 2);
}

TEST_F(Cli, IoErrorsExitThree) {
  const fs::path dir = scratch("cli_io");
  {
    std::ofstream(dir / "ok.cfg") << kTinyGrid;
  }
  EXPECT_EQ(exit_code("run --config " + (dir / "missing.cfg").string()), 3);
  EXPECT_EQ(exit_code("run --config " + (dir / "ok.cfg").string() + " --out /proc/mppi_forbidden"), 3);
}

TEST_F(Cli, VerifyAndForest) {
  EXPECT_EQ(exit_code("verify --suite lq"), 0);
  EXPECT_EQ(exit_code("verify --suite ratio"), 0);
  const fs::path dir = scratch("cli_forest");
  const fs::path out = dir / "forest.json";
  ASSERT_EQ(exit_code("forest --spacing 4 --seed 1 --out " + out.string()), 0);
  const ObstacleForest f = ObstacleForest::from_json(slurp(out));
  EXPECT_EQ(f, generate_forest(4.0, ForestBounds{}, 1));
}

TEST_F(Cli, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(MPPI_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(experiment_config(read_key_values(entry.path().string()))) << entry.path();
  }
}

}  // namespace
}  // namespace mppi
