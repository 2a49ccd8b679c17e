#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ottd/cli.hpp"

namespace {

ottd::ConfigMap load_with_overrides(const std::string& config_path, const std::string& seed_override,
                                    const std::string& out_override, const std::string& assets) {
  ottd::ConfigMap cfg;
  if (!config_path.empty()) cfg = ottd::load_config(config_path);
  if (!seed_override.empty()) cfg["run.seeds"] = seed_override;
  if (!out_override.empty()) cfg["run.output_dir"] = out_override;
  if (!assets.empty()) cfg["run.assets"] = assets;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy TD value estimation with target networks and over-parameterized linear models"};
  app.require_subcommand(1);

  std::string config_path, seed_override, out_override, assets;
  std::string results_path = "out/results.csv";
  std::string plot_dir = "out";
  std::string collect_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file");
    sub->add_option("--seed-override", seed_override, "replace run.seeds (space or comma separated)");
    sub->add_option("--out", out_override, "output directory override");
    sub->add_option("--assets", assets, "asset directory (four-room layout/policy)");
  };

  CLI::App* c_run = app.add_subcommand("run", "collect data, run the learner for each seed, write results.csv");
  add_common(c_run);
  CLI::App* c_diag = app.add_subcommand("diagnose", "convergence-condition reports and rate metrics");
  add_common(c_diag);
  CLI::App* c_fp = app.add_subcommand("fixed-point", "closed-form fixed point vs iterative limit");
  add_common(c_fp);
  CLI::App* c_bound = app.add_subcommand("bound", "value prediction error bound report");
  add_common(c_bound);
  CLI::App* c_collect = app.add_subcommand("collect", "collect a dataset and write it to a file");
  add_common(c_collect);
  c_collect->add_option("--dataset-out", collect_out, "dataset output path (default <out>/dataset.csv)");
  CLI::App* c_table = app.add_subcommand("table1", "Baird convergence-rate metric table");
  add_common(c_table);
  CLI::App* c_plot = app.add_subcommand("plot", "render SVG curves from a results.csv");
  c_plot->add_option("--results", results_path, "results.csv path");
  c_plot->add_option("--out", plot_dir, "output directory for SVG files");

  CLI11_PARSE(app, argc, argv);

  try {
    const ottd::ConfigMap cfg = load_with_overrides(config_path, seed_override, out_override, assets);
    if (c_run->parsed()) return ottd::cmd_run(cfg);
    if (c_diag->parsed()) return ottd::cmd_diagnose(cfg);
    if (c_fp->parsed()) return ottd::cmd_fixed_point(cfg);
    if (c_bound->parsed()) return ottd::cmd_bound(cfg);
    if (c_collect->parsed()) return ottd::cmd_collect(cfg, collect_out);
    if (c_table->parsed()) return ottd::cmd_table1(cfg);
    if (c_plot->parsed()) return ottd::cmd_plot(results_path, plot_dir);
  } catch (const ottd::Error& e) {
    std::cerr << "error [" << ottd::error_kind_name(e.kind()) << "]: " << e.what() << "\n";
    return ottd::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
