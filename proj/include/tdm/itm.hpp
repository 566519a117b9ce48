#pragma once

// Initiation-time search: sweep candidate relocation start times in steps of
// the configured interval, solving the fixed-initiation subproblem at each,
// and stop at the first non-improvement (optionally exhaustively for audits).

#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/formulation.hpp"
#include "tdm/network.hpp"
#include "tdm/scenario.hpp"
#include "tdm/solver.hpp"

namespace tdm {

// Normal and no-relocation-disrupted assignments at the base fleet; the
// constants of the fixed-initiation objective and the evaluator phases both
// consume these.
inline ReferenceAssignments compute_reference_assignments(
    const TransitNetwork& normal_net, const TransitNetwork& disrupted_net,
    const Scenario& scenario) {
  ReferenceAssignments refs;
  double H = scenario.time.horizon;
  auto normal =
      solve_path_shares(normal_net, scenario, base_fleet_vector(normal_net), H);
  if (!normal.feasible)
    fail_infeasible("undisrupted reference assignment: " + normal.message);
  auto disrupted = solve_path_shares(disrupted_net, scenario,
                                     base_fleet_vector(disrupted_net), H);
  if (!disrupted.feasible)
    fail_infeasible("disrupted reference assignment: " + disrupted.message);
  refs.p_normal = normal.shares;
  refs.p_disrupted = disrupted.shares;
  refs.cost_normal = normal.od_cost;
  refs.cost_disrupted = disrupted.od_cost;
  return refs;
}

struct ItmResult {
  double z_opt = 0.0;
  double objective = 0.0; // best subproblem value, dollars
  Solution best;          // solver output at z_opt
  struct TracePoint {
    double z;
    double objective; // dollars
    double gap;
    SolveStatus status;
  };
  std::vector<TracePoint> trace;
  ReferenceAssignments refs;
  int evaluations = 0;
};

struct ItmOptions {
  bool exhaustive = false; // audit mode: evaluate every candidate time
  // Fraction of the configured time budget spent per candidate; the sweep
  // typically ends within four evaluations.
  double per_step_budget_fraction = 0.25;
};

inline ItmResult run_itm(const TransitNetwork& normal_net,
                         const TransitNetwork& disrupted_net,
                         const Scenario& scenario, const SolverConfig& config,
                         const ItmOptions& options = {},
                         const ReferenceAssignments* refs_in = nullptr) {
  double step = scenario.time.itm_interval;
  double horizon = scenario.time.horizon;
  auto dist = scenario.duration();

  ItmResult out;
  out.refs = refs_in ? *refs_in
                     : compute_reference_assignments(normal_net, disrupted_net,
                                                     scenario);
  SolverConfig per_step = config;
  per_step.time_limit_s =
      std::max(1e-3, config.time_limit_s * options.per_step_budget_fraction);

  double best = std::numeric_limits<double>::infinity();
  double last_solution_z = -1.0;
  for (double z = 0.0; z <= horizon + 1e-9; z += step) {
    if (dist.tail_probability(z, true) <= 1e-15) break; // no world left to act in
    auto instance = build_itm_subproblem(disrupted_net, scenario, z, out.refs);
    auto sol = solve(instance, per_step);
    ++out.evaluations;
    if (!sol.has_incumbent()) {
      if (out.trace.empty())
        fail_solver("initiation sweep: first subproblem has no feasible plan");
      break;
    }
    double value = instance.total_cost_dollars(sol.x);
    out.trace.push_back({z, value, sol.gap, sol.status});
    // Later subproblems profit from the earlier fleet as a seed.
    std::vector<double> yseed;
    for (const auto& lv : instance.line_vars) yseed.push_back(sol.x[lv.y_var]);
    per_step.fleet_seeds = {yseed};
    if (value < best - 1e-9) {
      best = value;
      out.z_opt = z;
      out.objective = value;
      out.best = sol;
      last_solution_z = z;
    } else if (!options.exhaustive) {
      break; // first non-improvement ends the sweep
    }
  }
  if (last_solution_z < 0.0) fail_solver("initiation sweep found no plan");
  return out;
}

} // namespace tdm
