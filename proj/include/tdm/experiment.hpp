#pragma once

// Batch experiment driver shared by the command-line tool and the acceptance
// suite: family comparisons, the demand-by-duration grid, and alpha sweeps,
// with deterministic CSV and manifest emission.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tdm/evaluator.hpp"
#include "tdm/formulation.hpp"
#include "tdm/itm.hpp"
#include "tdm/network.hpp"
#include "tdm/scenario.hpp"
#include "tdm/scenario_io.hpp"
#include "tdm/solver.hpp"

namespace tdm {

struct ExperimentConfig {
  std::vector<std::string> families = {"LLA", "BB", "BM", "ITM"};
  std::optional<double> time_limit_override;
  // The initiation-time sweep solves several subproblems and gets a quarter
  // of its budget each; give it more than the one-shot models when the
  // per-candidate comparisons must be sharp.
  std::optional<double> itm_time_limit_override;
  std::optional<double> gap_override;
  bool emit_trace = false;
  std::string out_dir;
  int threads = 0; // grid parallelism; 0 picks the hardware count
};

struct CompareRow {
  std::string model;
  double objective_user = 0.0;
  double objective_operator = 0.0;
  double objective_total = 0.0;
  double expected_user_cost = 0.0;
  double eval_total = 0.0;
  int n_backup_bus = 0;
  double z = 0.0;
  std::string status;
  double gap = 0.0;
};

struct FamilyOutcome {
  std::string family;
  MitigationPlan plan;
  EvaluationReport eval;
  Solution solution;
  bool has_itm = false;
  ItmResult itm;
};

struct CompareResult {
  std::vector<FamilyOutcome> outcomes;
  std::vector<CompareRow> rows;
};

namespace detail_exp {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

inline std::function<void(double, double, double, double, long)> trace_sink(
    const std::string& path) {
  auto out = std::make_shared<std::ofstream>(path);
  *out << "elapsed_s,lb,ub,gap,nodes\n";
  return [out](double t, double lb, double ub, double gap, long nodes) {
    *out << fmt(t, 3) << "," << fmt(lb, 6) << "," << fmt(ub, 6) << "," << fmt(gap, 8)
         << "," << nodes << "\n";
    out->flush();
  };
}

} // namespace detail_exp

inline CompareRow make_row(const FamilyOutcome& oc) {
  CompareRow row;
  row.model = oc.family;
  row.objective_user = oc.plan.model_user_dollars;
  row.objective_operator = oc.plan.model_operator_dollars;
  row.objective_total = oc.plan.model_total_dollars;
  row.expected_user_cost = oc.eval.expected_user_cost;
  row.eval_total = oc.eval.total;
  row.n_backup_bus = oc.plan.backup_vehicles;
  row.z = oc.plan.initiation_z;
  row.status = to_string(oc.plan.status);
  row.gap = oc.plan.gap;
  return row;
}

// Runs the requested strategy families on one scenario. Families are solved
// in nesting order and each one seeds the next (a narrower family's plan is
// feasible for the wider one up to the epsilon floors), so reported
// incumbents respect the containment ordering even on hard instances.
inline CompareResult run_compare(const Scenario& scenario,
                                 const ExperimentConfig& cfg = {}) {
  scenario.validate();
  auto normal = with_od_paths(build_network(scenario.network), scenario.od_list,
                              scenario.solver.k_paths);
  auto disrupted =
      apply_disruption(normal, scenario.emergency, scenario.broken,
                       scenario.solver.k_paths);
  auto refs = compute_reference_assignments(normal, disrupted, scenario);

  SolverConfig solver_cfg;
  solver_cfg.gap_tol = cfg.gap_override.value_or(scenario.solver.gap_tol);
  solver_cfg.time_limit_s =
      cfg.time_limit_override.value_or(scenario.solver.time_limit_s);
  solver_cfg.max_nodes = scenario.solver.max_nodes;

  double T_eff = scenario.effective_T();
  CompareResult result;
  std::vector<std::vector<double>> seeds;

  auto wants = [&](const std::string& f) {
    for (const auto& g : cfg.families)
      if (g == f) return true;
    return false;
  };

  std::optional<QcqpInstance> base;
  for (const char* fam_name : {"LLA", "BB", "BM"}) {
    if (!wants(fam_name)) continue;
    if (!base) base = build_bm(disrupted, scenario, T_eff, &refs);
    if (!base->status_quo_capacity_ok)
      fail_infeasible("scenario infeasible at status quo: the disrupted network "
                      "cannot carry the demand without relocation");
    auto fam = *family_from_string(fam_name);
    auto instance = restrict(*base, fam, disrupted);
    SolverConfig run_cfg = solver_cfg;
    run_cfg.fleet_seeds = seeds;
    if (cfg.emit_trace && !cfg.out_dir.empty())
      run_cfg.on_bound_update = detail_exp::trace_sink(
          cfg.out_dir + "/trace_" + fam_name + ".csv");
    auto sol = solve(instance, run_cfg);
    if (!sol.has_incumbent())
      fail_solver(std::string("no feasible plan found for family ") + fam_name);
    std::vector<double> yseed;
    for (const auto& lv : instance.line_vars) yseed.push_back(sol.x[lv.y_var]);
    seeds.push_back(yseed);
    FamilyOutcome oc;
    oc.family = fam_name;
    oc.solution = sol;
    oc.plan = decode_plan(sol, instance, disrupted, refs, 0.0, scenario);
    oc.eval = evaluate(oc.plan, scenario, normal, disrupted);
    result.outcomes.push_back(std::move(oc));
  }
  if (wants("ITM")) {
    SolverConfig run_cfg = solver_cfg;
    run_cfg.fleet_seeds = seeds;
    if (cfg.itm_time_limit_override) run_cfg.time_limit_s = *cfg.itm_time_limit_override;
    ItmOptions opts;
    auto itm = run_itm(normal, disrupted, scenario, run_cfg, opts, &refs);
    auto instance =
        build_itm_subproblem(disrupted, scenario, itm.z_opt, refs);
    FamilyOutcome oc;
    oc.family = "ITM";
    oc.solution = itm.best;
    oc.has_itm = true;
    oc.plan = decode_plan(itm.best, instance, disrupted, refs, itm.z_opt, scenario);
    oc.eval = evaluate(oc.plan, scenario, normal, disrupted);
    oc.itm = std::move(itm);
    result.outcomes.push_back(std::move(oc));
    if (cfg.emit_trace && !cfg.out_dir.empty()) {
      std::ofstream tr(cfg.out_dir + "/trace_ITM.csv");
      tr << "z,objective,gap,status\n";
      for (const auto& pt : result.outcomes.back().itm.trace)
        tr << detail_exp::fmt(pt.z, 1) << "," << detail_exp::fmt(pt.objective, 4)
           << "," << detail_exp::fmt(pt.gap, 8) << "," << to_string(pt.status)
           << "\n";
    }
  }
  for (const auto& oc : result.outcomes) result.rows.push_back(make_row(oc));
  return result;
}

inline void write_comparison_csv(const std::string& path,
                                 const std::vector<CompareRow>& rows,
                                 const std::string& extra_header = "",
                                 const std::string& extra_prefix = "") {
  std::ofstream out(path);
  if (!out) fail_schema("cannot write '" + path + "'");
  out << extra_header
      << "model,objective_user,objective_operator,objective_total,"
         "expected_user_cost,eval_total,n_backup_bus,z,status,gap\n";
  for (const auto& r : rows) {
    out << extra_prefix << r.model << "," << detail_exp::fmt(r.objective_user) << ","
        << detail_exp::fmt(r.objective_operator) << ","
        << detail_exp::fmt(r.objective_total) << ","
        << detail_exp::fmt(r.expected_user_cost) << "," << detail_exp::fmt(r.eval_total)
        << "," << r.n_backup_bus << "," << detail_exp::fmt(r.z, 1) << "," << r.status
        << "," << detail_exp::fmt(r.gap, 8) << "\n";
  }
}

inline void write_summary_text(const std::string& path,
                               const std::vector<CompareRow>& rows) {
  std::ofstream out(path);
  out << std::left << std::setw(6) << "model" << std::right << std::setw(14)
      << "user ($)" << std::setw(14) << "operator ($)" << std::setw(14)
      << "total ($)" << std::setw(16) << "eval user ($)" << std::setw(14)
      << "eval total" << std::setw(8) << "BU bus" << std::setw(6) << "z"
      << std::setw(12) << "status" << std::setw(12) << "gap" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(6) << r.model << std::right << std::fixed
        << std::setprecision(1) << std::setw(14) << r.objective_user << std::setw(14)
        << r.objective_operator << std::setw(14) << r.objective_total << std::setw(16)
        << r.expected_user_cost << std::setw(14) << r.eval_total << std::setw(8)
        << r.n_backup_bus << std::setw(6) << std::setprecision(0) << r.z
        << std::setw(12) << r.status << std::setw(12) << std::setprecision(6)
        << r.gap << "\n";
  }
}

struct GridCell {
  DemandShape shape;
  DurationKind kind;
  CompareResult result;
};

inline Scenario scenario_for_cell(Scenario base, DemandShape shape,
                                  DurationKind kind) {
  for (auto& d : base.od_demand) d.shape = shape;
  base.duration_kind = kind;
  base.duration_params.custom_pmf.clear();
  return base;
}

inline const std::vector<DemandShape>& grid_shapes() {
  static const std::vector<DemandShape> shapes = {
      DemandShape::uniform, DemandShape::increasing, DemandShape::decreasing,
      DemandShape::convex, DemandShape::concave};
  return shapes;
}

inline const std::vector<DurationKind>& grid_kinds() {
  static const std::vector<DurationKind> kinds = {
      DurationKind::uniform, DurationKind::normal_like,
      DurationKind::exponential_like, DurationKind::biDirac};
  return kinds;
}

// The full demand-pattern by duration-distribution grid. Cells run
// concurrently; each cell's solver stays single-threaded and deterministic.
inline std::vector<GridCell> run_grid(const Scenario& base,
                                      const ExperimentConfig& cfg = {}) {
  std::vector<GridCell> cells;
  for (auto shape : grid_shapes())
    for (auto kind : grid_kinds()) cells.push_back({shape, kind, {}});

  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  std::mutex mu;
  size_t next = 0;
  std::vector<std::string> errors;
  auto worker = [&] {
    while (true) {
      size_t mine;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= cells.size()) return;
        mine = next++;
      }
      try {
        ExperimentConfig cell_cfg = cfg;
        cell_cfg.emit_trace = false; // per-cell traces would collide
        auto scn = scenario_for_cell(base, cells[mine].shape, cells[mine].kind);
        cells[mine].result = run_compare(scn, cell_cfg);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        errors.push_back(std::string(to_string(cells[mine].shape)) + "/" +
                         to_string(cells[mine].kind) + ": " + e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!errors.empty()) fail_solver("grid cells failed: " + errors.front());

  if (!cfg.out_dir.empty()) {
    std::ofstream summary(cfg.out_dir + "/grid_summary.csv");
    summary << "demand,duration,model,objective_user,objective_operator,"
               "objective_total,expected_user_cost,eval_total,n_backup_bus,z,"
               "status,gap\n";
    for (const auto& cell : cells) {
      std::string name = std::string("compare__") + to_string(cell.shape) + "__" +
                         to_string(cell.kind) + ".csv";
      write_comparison_csv(cfg.out_dir + "/" + name, cell.result.rows);
      for (const auto& r : cell.result.rows)
        summary << to_string(cell.shape) << "," << to_string(cell.kind) << ","
                << r.model << "," << detail_exp::fmt(r.objective_user) << ","
                << detail_exp::fmt(r.objective_operator) << ","
                << detail_exp::fmt(r.objective_total) << ","
                << detail_exp::fmt(r.expected_user_cost) << ","
                << detail_exp::fmt(r.eval_total) << "," << r.n_backup_bus << ","
                << detail_exp::fmt(r.z, 1) << "," << r.status << ","
                << detail_exp::fmt(r.gap, 8) << "\n";
    }
  }
  return cells;
}

struct SweepRow {
  std::string demand, duration;
  double alpha = 0.0;
  int bb_backup_bus = 0;
  double itm_z = 0.0;
  double bb_total = 0.0;
  double itm_total = 0.0;
};

// Sensitivity of the operator-cost weight: per alpha, the bridging family's
// backup-bus count and the initiation-time choice.
inline std::vector<SweepRow> run_alpha_sweep(const Scenario& base,
                                             const std::vector<double>& alphas,
                                             const ExperimentConfig& cfg = {}) {
  if (alphas.size() < 2) fail_schema("alpha sweep needs at least two values");
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    Scenario scn = base;
    scn.costs.alpha = a;
    ExperimentConfig run_cfg = cfg;
    run_cfg.families = {"BB", "ITM"};
    run_cfg.emit_trace = false;
    auto res = run_compare(scn, run_cfg);
    SweepRow row;
    row.demand = to_string(base.od_demand.empty() ? DemandShape::uniform
                                                  : base.od_demand.front().shape);
    row.duration = to_string(base.duration_kind);
    row.alpha = a;
    for (const auto& oc : res.outcomes) {
      if (oc.family == "BB") {
        row.bb_backup_bus = oc.plan.backup_vehicles;
        row.bb_total = oc.plan.model_total_dollars;
      }
      if (oc.family == "ITM") {
        row.itm_z = oc.plan.initiation_z;
        row.itm_total = oc.plan.model_total_dollars;
      }
    }
    rows.push_back(row);
  }
  if (!cfg.out_dir.empty()) {
    std::ofstream out(cfg.out_dir + "/alpha_sweep.csv");
    out << "demand,duration,alpha,bb_backup_bus,itm_z,bb_total,itm_total\n";
    for (const auto& r : rows)
      out << r.demand << "," << r.duration << "," << detail_exp::fmt(r.alpha, 2) << ","
          << r.bb_backup_bus << "," << detail_exp::fmt(r.itm_z, 1) << ","
          << detail_exp::fmt(r.bb_total) << "," << detail_exp::fmt(r.itm_total)
          << "\n";
  }
  return rows;
}

// Manifest: enough to re-run and to pin the inputs, no timestamps so repeated
// runs stay byte-identical.
inline void write_manifest(const std::string& path, const std::string& command,
                           const std::string& scenario_path,
                           const ExperimentConfig& cfg,
                           const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["command"] = command;
  m["scenario"]["path"] = scenario_path;
  m["scenario"]["fnv1a64"] = content_hash_file(scenario_path);
  m["config"]["families"] = cfg.families;
  if (cfg.time_limit_override) m["config"]["time_limit"] = *cfg.time_limit_override;
  if (cfg.gap_override) m["config"]["gap_tol"] = *cfg.gap_override;
  m["config"]["trace"] = cfg.emit_trace;
  m["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) fail_schema("cannot write manifest '" + path + "'");
  out << m.dump(2) << "\n";
}

} // namespace tdm
