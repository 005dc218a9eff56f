#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noisy_sqp/harness.hpp"
#include "noisy_sqp/report.hpp"

using namespace noisy_sqp;

namespace {

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.problems = {"HS7", "BT11"};
  plan.eps_levels = {{1e-5, 1e-5}, {1e-3, 1e-3}};
  plan.seeds = {1, 2, 3};
  plan.k_max_values = {100, 300};
  plan.relaxation_modes = {true, false};
  plan.est_multipliers = {1.0};
  return plan;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(TableMultipliers, PerNoiseLevel) {
  EXPECT_EQ(table_multipliers(1e-5), (std::vector<double>{1.0, 1e-3, 1e3}));
  EXPECT_EQ(table_multipliers(1e-3), (std::vector<double>{1.0, 1e-2, 1e2}));
  EXPECT_EQ(table_multipliers(1e-1), (std::vector<double>{1.0, 1e-1, 1e1}));
}

TEST(ExperimentPlan, Validation) {
  ExperimentPlan plan = small_plan();
  EXPECT_NO_THROW(plan.validate());
  plan.problems = {"HS99"};
  EXPECT_THROW(plan.validate(), UnknownProblem);
  plan = small_plan();
  plan.seeds.clear();
  EXPECT_THROW(plan.validate(), ContractViolation);
  plan = small_plan();
  plan.k_max_values = {0};
  EXPECT_THROW(plan.validate(), ContractViolation);
}

TEST(TraceCsv, HeaderAndRowCount) {
  const RunOutcome out = execute_run(trace_run_spec("HS7", 1e-3, 1e-3, 1, 250));
  const std::string csv = trace_csv(out.result.trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTraceHeader);
  EXPECT_EQ(count_lines(csv), 251u);
}

TEST(TraceCsv, FailedRunRowsMatchIterations) {
  RunSpec spec = trace_run_spec("HS7", 1e-5, 1e-5, 1, 500);
  spec.relaxation = false;
  const RunOutcome out = execute_run(spec);
  ASSERT_EQ(out.result.status, SolverStatus::kLineSearchFailure);
  EXPECT_EQ(count_lines(trace_csv(out.result.trace)),
            static_cast<std::size_t>(*out.result.failure_iter) + 2);
}

TEST(TraceExperiment, WritesIdenticalFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "noisy_sqp_trace_a.csv";
  const auto b = dir / "noisy_sqp_trace_b.csv";
  const RunSpec spec = trace_run_spec("BT11", 1e-3, 1e-3, 4, 1000);
  run_trace_experiment(spec, a.string());
  run_trace_experiment(spec, b.string());
  const std::string ta = slurp(a), tb = slurp(b);
  EXPECT_EQ(count_lines(ta), 1001u);
  EXPECT_EQ(ta, tb);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(TraceExperiment, Hs7StaysInBand) {
  const RunOutcome out = execute_run(trace_run_spec("HS7", 1e-3, 1e-3, 1, 1000));
  std::vector<double> d = out.dist;
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double p90 = sorted[static_cast<std::size_t>(0.9 * (sorted.size() - 1))];
  const double tail_max = *std::max_element(d.begin() + 100, d.end());
  EXPECT_LE(tail_max, 10.0 * p90);
}

TEST(TraceExperiment, ZeroNoiseDistanceShrinks) {
  for (auto name : kProblemNames) {
    const RunOutcome out =
        execute_run(trace_run_spec(std::string(name), 0.0, 0.0, 1, 1000));
    const auto& d = out.dist;
    const auto first = std::find_if(d.begin(), d.end(),
                                    [](double v) { return v <= 1e-8; });
    ASSERT_NE(first, d.end()) << name;
    EXPECT_TRUE(std::all_of(first, d.end(), [](double v) { return v <= 1e-8; }))
        << name;
    for (auto it = d.begin() + 1; it != first; ++it) {
      EXPECT_LE(*it, *(it - 1)) << name << " at k=" << (it - d.begin());
    }
  }
}

TEST(Summarize, PrefixMatchesShorterRun) {
  RunSpec long_spec;
  long_spec.problem = "HS40";
  long_spec.noise = {1e-3, 1e-3, 6};
  long_spec.max_iters = 400;
  RunSpec short_spec = long_spec;
  short_spec.max_iters = 150;
  const RunOutcome long_out = execute_run(long_spec);
  const RunOutcome short_out = execute_run(short_spec);
  const RunSummary a = summarize(long_spec, long_out, 150);
  const RunSummary b = summarize(short_spec, short_out);
  EXPECT_EQ(a.min_dist, b.min_dist);
  EXPECT_EQ(a.min_dist_iter, b.min_dist_iter);
  EXPECT_EQ(a.iters_run, b.iters_run);
  EXPECT_EQ(a.final_pi, b.final_pi);
  EXPECT_EQ(a.status, SolverStatus::kMaxIters);
  EXPECT_EQ(a.k_max, 150);
}

TEST(RelaxationTable, Examples) {
  ExperimentPlan plan;
  plan.problems = {"HS7"};
  plan.eps_levels = {{1e-5, 1e-5}};
  plan.seeds = {1};
  plan.k_max_values = {500};
  plan.relaxation_modes = {false, true};
  plan.est_multipliers = {1.0};
  const auto rows = run_relaxation_table(plan, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].relaxation);
  EXPECT_EQ(rows[0].status, SolverStatus::kLineSearchFailure);
  EXPECT_GE(rows[0].min_dist, 1e-4);
  EXPECT_LE(rows[0].min_dist, 1e-1);
  EXPECT_TRUE(rows[1].relaxation);
  EXPECT_LE(rows[1].min_dist, 1e-5);

  plan.problems = {"BT11"};
  plan.eps_levels = {{1e-1, 1e-1}};
  plan.k_max_values = {1000};
  plan.relaxation_modes = {true};
  const auto bt = run_relaxation_table(plan, 1);
  ASSERT_EQ(bt.size(), 1u);
  EXPECT_LE(bt[0].min_dist, 1.0);
}

TEST(RelaxationTable, RowsPerKMax) {
  const auto rows = run_relaxation_table(small_plan(), 1);
  // relaxed runs report both k_max values, unrelaxed runs one row
  EXPECT_EQ(rows.size(), 2u * 2u * 3u * (2u + 1u));
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pi_monotone);
    if (r.relaxation) {
      EXPECT_LE(r.iters_run, r.k_max);
    }
  }
}

TEST(RelaxationTable, ParallelMatchesSerial) {
  const ExperimentPlan plan = small_plan();
  const auto serial = summaries_json("relaxation", run_relaxation_table(plan, 1));
  const auto parallel =
      summaries_json("relaxation", run_relaxation_table(plan, 4));
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(serial, summaries_json("relaxation", run_relaxation_table(plan, 3)));
}

TEST(RelaxationTable, AccuracyDegradesWithNoise) {
  ExperimentPlan plan;
  plan.problems = {"HS7", "BT11", "HS40"};
  plan.eps_levels = {{1e-5, 1e-5}, {1e-3, 1e-3}, {1e-1, 1e-1}};
  for (std::uint64_t s = 1; s <= 10; ++s) plan.seeds.push_back(s);
  plan.k_max_values = {500};
  plan.relaxation_modes = {true};
  plan.est_multipliers = {1.0};
  const auto rows = run_relaxation_table(plan);
  for (const auto& prob : plan.problems) {
    double mean[3] = {0, 0, 0};
    for (const auto& r : rows) {
      if (r.problem != prob) continue;
      const int level = r.eps1 < 1e-4 ? 0 : (r.eps1 < 1e-2 ? 1 : 2);
      mean[level] += r.min_dist / 10.0;
    }
    EXPECT_LE(mean[0], mean[1]) << prob;
    EXPECT_LE(mean[1], mean[2]) << prob;
  }
}

TEST(MisestimationTable, Hs7Examples) {
  ExperimentPlan plan;
  plan.problems = {"HS7"};
  plan.eps_levels = {{1e-5, 1e-5}};
  plan.seeds = {1};
  plan.k_max_values = {10000};
  plan.relaxation_modes = {true};
  plan.est_multipliers = table_multipliers(1e-5);
  const auto rows = run_misestimation_table(plan, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].est_multiplier, 1.0);
  EXPECT_EQ(rows[0].termination, TerminationKind::kOpt);
  EXPECT_EQ(rows[1].termination, TerminationKind::kLineSearch);
  EXPECT_EQ(rows[2].termination, TerminationKind::kOpt);
  EXPECT_GE(rows[2].min_dist, 10.0 * rows[0].min_dist);
  EXPECT_LT(rows[2].iters_run, rows[0].iters_run);
}

TEST(Report, JsonFields) {
  ExperimentPlan plan = small_plan();
  plan.problems = {"HS7"};
  plan.eps_levels = {{1e-5, 1e-5}};
  plan.seeds = {1};
  plan.relaxation_modes = {false};
  const auto rows = run_relaxation_table(plan, 1);
  const auto doc = nlohmann::json::parse(summaries_json("relaxation", rows));
  EXPECT_EQ(doc["table"], "relaxation");
  ASSERT_EQ(doc["runs"].size(), 1u);
  const auto& r = doc["runs"][0];
  EXPECT_EQ(r["problem"], "HS7");
  EXPECT_EQ(r["status"], "line_search_failure");
  EXPECT_EQ(r["termination_kind"], "ls");
  EXPECT_TRUE(r["failure_iter"].is_number_integer());
  EXPECT_EQ(r["seed"], 1);
  EXPECT_FALSE(r["relaxation"].get<bool>());
}

TEST(Report, TextTable) {
  RunSummary s;
  s.problem = "HS7";
  s.eps1 = 1e-3;
  s.min_dist = 0.5;
  const std::string text = summaries_text({s, s});
  EXPECT_EQ(count_lines(text), 3u);
  EXPECT_NE(text.find("min_dist"), std::string::npos);
  EXPECT_NE(text.find("HS7"), std::string::npos);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(ParallelMap, KeepsIndexOrder) {
  const auto out = parallel_map<int>(
      1000, 4, [](std::size_t i) { return static_cast<int>(i * i % 97); });
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i], static_cast<int>(i * i % 97));
  }
  EXPECT_TRUE(parallel_map<int>(0, 4, [](std::size_t) { return 0; }).empty());
}
