// Batch experiment runner: scenario validation, strategy-family comparisons,
// the demand-by-duration grid, and alpha sweeps. Outputs are CSV files plus a
// plain-text summary and a manifest per run.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdm/experiment.hpp"
#include "tdm/scenario_io.hpp"

namespace {

int exit_code_for(const tdm::Error& e) {
  switch (e.kind()) {
    case tdm::Error::Kind::schema: return 2;
    case tdm::Error::Kind::infeasible: return 3;
    default: return 4;
  }
}

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  std::vector<std::string> families = {"LLA", "BB", "BM", "ITM"};
  double time_limit = -1.0;
  double itm_time_limit = -1.0;
  double gap = -1.0;
  bool trace = false;
  int threads = 0;
};

tdm::ExperimentConfig to_config(const CommonOpts& o) {
  tdm::ExperimentConfig cfg;
  cfg.families = o.families;
  if (o.time_limit > 0) cfg.time_limit_override = o.time_limit;
  if (o.itm_time_limit > 0) cfg.itm_time_limit_override = o.itm_time_limit;
  if (o.gap > 0) cfg.gap_override = o.gap;
  cfg.emit_trace = o.trace;
  cfg.out_dir = o.out_dir;
  cfg.threads = o.threads;
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) tdm::fail_schema("cannot create output directory '" + dir + "'");
}

int cmd_validate(const std::string& path) {
  auto scenario = tdm::load_scenario_file(path);
  auto normal = tdm::with_od_paths(tdm::build_network(scenario.network),
                                   scenario.od_list, scenario.solver.k_paths);
  auto disrupted = tdm::apply_disruption(normal, scenario.emergency,
                                         scenario.broken, scenario.solver.k_paths);
  auto probe = tdm::solve_path_shares(disrupted, scenario,
                                      tdm::base_fleet_vector(disrupted),
                                      scenario.time.horizon);
  std::cout << "network: " << normal.stops.size() << " stops, "
            << normal.lines.size() << " lines, " << normal.segments.size()
            << " segments\n";
  std::cout << "disrupted: " << disrupted.lines.size() << " lines, "
            << disrupted.segments.size() << " segments\n";
  for (size_t w = 0; w < disrupted.od_pairs.size(); ++w)
    std::cout << "  " << disrupted.od_pairs[w].key << ": "
              << disrupted.paths[w].size() << " paths\n";
  if (!probe.feasible) {
    std::cout << "status quo: demand exceeds no-relocation capacity ("
              << probe.message << ")\n";
    tdm::fail_infeasible(probe.message);
  }
  std::cout << "status quo: capacity-feasible without relocation\n";
  std::cout << "scenario OK\n";
  return 0;
}

int cmd_compare(const CommonOpts& o) {
  auto scenario = tdm::load_scenario_file(o.scenario_path);
  ensure_out_dir(o.out_dir);
  auto cfg = to_config(o);
  auto result = tdm::run_compare(scenario, cfg);
  std::string csv = o.out_dir + "/comparison.csv";
  std::string txt = o.out_dir + "/summary.txt";
  tdm::write_comparison_csv(csv, result.rows);
  tdm::write_summary_text(txt, result.rows);
  tdm::write_manifest(o.out_dir + "/manifest.json", "compare", o.scenario_path, cfg,
                      {csv, txt});
  std::ifstream echo(txt);
  std::cout << echo.rdbuf();
  return 0;
}

int cmd_grid(const CommonOpts& o) {
  auto scenario = tdm::load_scenario_file(o.scenario_path);
  ensure_out_dir(o.out_dir);
  auto cfg = to_config(o);
  auto cells = tdm::run_grid(scenario, cfg);
  std::vector<std::string> outputs = {o.out_dir + "/grid_summary.csv"};
  for (const auto& cell : cells)
    outputs.push_back(o.out_dir + "/compare__" +
                      std::string(tdm::to_string(cell.shape)) + "__" +
                      tdm::to_string(cell.kind) + ".csv");
  tdm::write_manifest(o.out_dir + "/manifest.json", "grid", o.scenario_path, cfg,
                      outputs);
  std::cout << "grid complete: " << cells.size() << " cells -> " << o.out_dir
            << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::vector<double>& alphas) {
  auto scenario = tdm::load_scenario_file(o.scenario_path);
  ensure_out_dir(o.out_dir);
  auto cfg = to_config(o);
  auto rows = tdm::run_alpha_sweep(scenario, alphas, cfg);
  tdm::write_manifest(o.out_dir + "/manifest.json", "sweep-alpha", o.scenario_path,
                      cfg, {o.out_dir + "/alpha_sweep.csv"});
  for (const auto& r : rows)
    std::cout << "alpha " << r.alpha << ": BB backup buses " << r.bb_backup_bus
              << ", initiation z " << r.itm_z << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-level transit disruption mitigation toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::vector<double> alphas;

  auto add_common = [&](CLI::App* cmd, bool solver_opts) {
    cmd->add_option("scenario", opts.scenario_path, "scenario JSON file")
        ->required();
    if (solver_opts) {
      cmd->add_option("--out", opts.out_dir, "output directory");
      cmd->add_option("--families", opts.families,
                      "families to run (LLA BB BM ITM)")
          ->delimiter(',');
      cmd->add_option("--time-limit", opts.time_limit,
                      "solver time limit per model, seconds");
      cmd->add_option("--itm-time-limit", opts.itm_time_limit,
                      "time budget for the initiation-time sweep, seconds");
      cmd->add_option("--gap", opts.gap, "solver relative gap tolerance");
      cmd->add_flag("--trace", opts.trace, "emit bound-update trace CSVs");
      cmd->add_option("--threads", opts.threads, "worker threads for grid cells");
    }
  };

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  add_common(validate, false);
  auto* compare = app.add_subcommand("compare", "run the strategy families once");
  add_common(compare, true);
  auto* grid = app.add_subcommand(
      "grid", "run the demand-pattern by duration-distribution grid");
  add_common(grid, true);
  auto* sweep = app.add_subcommand("sweep-alpha", "sweep the operator cost weight");
  add_common(sweep, true);
  sweep->add_option("--alphas", alphas, "alpha values")->delimiter(',')->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(opts.scenario_path);
    if (compare->parsed()) return cmd_compare(opts);
    if (grid->parsed()) return cmd_grid(opts);
    if (sweep->parsed()) return cmd_sweep(opts, alphas);
  } catch (const tdm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
