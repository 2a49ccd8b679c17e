#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ottd/cli.hpp"
#include "ottd/envs.hpp"
#include "ottd/io.hpp"

using namespace ottd;

namespace {

std::string temp_dir() {
  static int counter = 0;
  const std::string dir =
      (std::filesystem::temp_directory_path() / ("ottd_test_" + std::to_string(counter++))).string();
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const ConfigMap c = parse_config_text("# comment\n[run]\nproblem = baird\n eta =0.5\n\n[dataset]\nsize= 300\n");
  CHECK(cfg_get(c, "run.problem", "") == "baird");
  CHECK(cfg_get_double(c, "run.eta", 0.0) == 0.5);
  CHECK(cfg_get_size(c, "dataset.size", 0) == 300);
  CHECK(cfg_get(c, "run.missing", "fallback") == "fallback");
  CHECK_THROWS_AS((void)parse_config_text("[run\nbad"), Error);
  CHECK_THROWS_AS((void)parse_config_text("novalue\n"), Error);

  const ConfigMap seeds = parse_config_text("[run]\nseeds = 0, 1, 7\n");
  const auto s = cfg_get_seeds(seeds, "run.seeds", {});
  REQUIRE(s.size() == 3);
  CHECK(s[2] == 7);
}

TEST_CASE("dataset round trip is exact") {
  const FourRoomProblem f = make_four_room();
  const TransitionDataset ds =
      collect_trajectory_steps(f.mdp, f.behavior, f.start, 120, 30, {f.terminal_state}, 77);
  TransitionDataset annotated = ds;
  annotate_is_ratios(annotated, f.target, f.behavior);

  const std::string path = temp_dir() + "/dataset.csv";
  save_dataset(path, annotated);
  const TransitionDataset back = load_dataset(path);
  REQUIRE(back.size() == annotated.size());
  REQUIRE(back.trajectory_bounds == annotated.trajectory_bounds);
  CHECK(back.kind == TransitionDataset::Kind::trajectory);
  for (std::size_t i = 0; i < back.size(); ++i) {
    const Transition& a = annotated.transitions[i];
    const Transition& b = back.transitions[i];
    CHECK(a.s == b.s);
    CHECK(a.a == b.a);
    CHECK(a.r == b.r);  // bit-exact via %.17g
    CHECK(a.s_next == b.s_next);
    CHECK(a.a_next == b.a_next);
    CHECK(a.is_ratio == b.is_ratio);
    CHECK(a.loop_flag == b.loop_flag);
  }
}

TEST_CASE("problem file round trip") {
  const TwoStateProblem ts = make_two_state(0.9);
  ProblemFile pf;
  pf.mdp = ts.mdp;
  pf.pi = ts.pi;
  pf.phi = ts.phi_over;
  pf.lambda = pathological_lambda(0.9);
  pf.theta0 = Vector{0.1, -0.2, 0.3};

  const std::string path = temp_dir() + "/problem.txt";
  save_problem(path, pf);
  const ProblemFile back = load_problem(path);
  CHECK(back.mdp.n_states == 2);
  CHECK(back.mdp.discount == 0.9);
  CHECK(back.mdp.transition == pf.mdp.transition);
  CHECK(back.mdp.reward == pf.mdp.reward);
  CHECK(back.phi.phi.a == pf.phi.phi.a);
  REQUIRE(back.lambda.has_value());
  CHECK(*back.lambda == *pf.lambda);
  REQUIRE(back.theta0.has_value());
  CHECK(*back.theta0 == *pf.theta0);
}

TEST_CASE("results csv round trip") {
  std::vector<ResultRow> rows;
  rows.push_back({"exp", "ottd", 3, 0, 21.0, 1.25, "converged"});
  rows.push_back({"exp", "ottd", 3, 10, 0.5, std::nan(""), "converged"});
  const std::string path = temp_dir() + "/results.csv";
  write_results_csv(path, rows);
  const auto back = read_results_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].experiment_id == "exp");
  CHECK(back[0].seed == 3);
  CHECK(back[0].max_value_error == 21.0);
  CHECK(back[1].step == 10);
  CHECK(std::isnan(back[1].emsbe));
  CHECK(back[1].status == "converged");
}

TEST_CASE("cmd_run is reproducible byte for byte") {
  const std::string d1 = temp_dir(), d2 = temp_dir();
  ConfigMap cfg = parse_config_text(
      "[run]\nproblem = baird\nalgorithm = ottd\nmax_iters = 400\nseeds = 0 1\ntrace_stride = 10\n");
  cfg["run.output_dir"] = d1;
  REQUIRE(cmd_run(cfg) == 0);
  cfg["run.output_dir"] = d2;
  REQUIRE(cmd_run(cfg) == 0);
  CHECK(slurp(d1 + "/results.csv") == slurp(d2 + "/results.csv"));
  CHECK(!slurp(d1 + "/results.csv").empty());

  // Reload reproduces identical rows.
  const auto rows = read_results_csv(d1 + "/results.csv");
  write_results_csv(d1 + "/results2.csv", rows);
  CHECK(slurp(d1 + "/results.csv") == slurp(d1 + "/results2.csv"));
}

TEST_CASE("cmd_run with max_iters=0 leaves one row per seed") {
  const std::string dir = temp_dir();
  ConfigMap cfg =
      parse_config_text("[run]\nproblem = baird\nalgorithm = otd\nmax_iters = 0\nseeds = 4 5 6\n");
  cfg["run.output_dir"] = dir;
  REQUIRE(cmd_run(cfg) == 0);
  const auto rows = read_results_csv(dir + "/results.csv");
  CHECK(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.step == 0);
}

TEST_CASE("cmd_fixed_point surfaces nonexistence as exit 3") {
  ConfigMap cfg = parse_config_text(
      "[run]\nproblem = two_state\nalgorithm = expected_td\nexpected = true\nlambda = pathological\ngamma = "
      "0.95\nmax_iters = 10\n");
  int code = 0;
  try {
    code = cmd_fixed_point(cfg);
  } catch (const Error& e) {
    code = exit_code_for(e);
  }
  CHECK(code == 3);
}

TEST_CASE("cmd_diagnose runs on the counterexamples") {
  ConfigMap cfg = parse_config_text("[run]\nproblem = two_state\ngamma = 0.9\n");
  CHECK(cmd_diagnose(cfg) == 0);
  const std::string dir = temp_dir();
  ConfigMap baird = parse_config_text("[run]\nproblem = baird\n");
  baird["run.output_dir"] = dir;
  CHECK(cmd_diagnose(baird) == 0);
  CHECK(slurp(dir + "/table1.csv").find("Target TD") != std::string::npos);
}

TEST_CASE("cmd_plot renders curves and rejects empty input") {
  const std::string dir = temp_dir();
  ConfigMap cfg = parse_config_text(
      "[run]\nproblem = baird\nalgorithm = ottd\nmax_iters = 300\nseeds = 0 1\ntrace_stride = 10\n");
  cfg["run.output_dir"] = dir;
  REQUIRE(cmd_run(cfg) == 0);
  CHECK(cmd_plot(dir + "/results.csv", dir) == 0);
  const std::string svg = slurp(dir + "/value_error.svg");
  CHECK(svg.find("polyline") != std::string::npos);

  const std::string empty_path = dir + "/empty.csv";
  {
    std::ofstream out(empty_path);
    out << "experiment_id,algorithm,seed,step,max_value_error,emsbe,status\n";
  }
  CHECK_THROWS_AS((void)cmd_plot(empty_path, dir), Error);
}

TEST_CASE("svg writer uses log scale for wide ranges") {
  const std::string path = temp_dir() + "/plot.svg";
  Curve c;
  c.label = "curve";
  for (int i = 0; i <= 10; ++i) c.points.emplace_back(i, std::pow(10.0, i - 5));
  write_svg_plot(path, "wide", "x", "y", {c});
  CHECK(slurp(path).find("log scale") != std::string::npos);
}
