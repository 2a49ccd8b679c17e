#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ottd/data.hpp"
#include "ottd/mdp.hpp"

namespace ottd {

// Flat key-value config with [section] headers; keys are "section.key".
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config(const std::string& path);

std::string cfg_get(const ConfigMap& c, const std::string& key, const std::string& fallback);
double cfg_get_double(const ConfigMap& c, const std::string& key, double fallback);
std::size_t cfg_get_size(const ConfigMap& c, const std::string& key, std::size_t fallback);
bool cfg_get_bool(const ConfigMap& c, const std::string& key, bool fallback);
std::vector<std::uint64_t> cfg_get_seeds(const ConfigMap& c, const std::string& key,
                                         const std::vector<std::uint64_t>& fallback);

// Exact decimal round-trip formatting (%.17g) used by every data format.
std::string format_exact(double x);
// 12-significant-digit formatting used by results.csv.
std::string format_result(double x);

// Dataset serialization: one record per transition,
// traj_id,t,s,a,r,s_next,a_next,is_ratio,loop_flag.
void save_dataset(const std::string& path, const TransitionDataset& dataset);
TransitionDataset load_dataset(const std::string& path);

// Problem files bundle an MDP, a target policy, features and optional
// lambda / theta0 / behavior sections in the config format.
struct ProblemFile {
  Mdp mdp;
  Policy pi;
  FeatureMatrix phi;
  std::optional<Policy> mu;
  std::optional<Vector> lambda;
  std::optional<Vector> theta0;
};

void save_problem(const std::string& path, const ProblemFile& problem);
ProblemFile load_problem(const std::string& path);

struct ResultRow {
  std::string experiment_id;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  double max_value_error = 0.0;
  double emsbe = 0.0;
  std::string status;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Plain polyline SVG; switches to log-scale y when the positive values span
// at least three decades.
struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Curve>& curves);

}  // namespace ottd
