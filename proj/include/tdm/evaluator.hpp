#pragma once

// Quasi-dynamic evaluation of a mitigation plan under the duration pmf:
// interval-stepped FIFO queues per OD and path, static per-interval segment
// capacities, deterministic path costs charged at boarding, queue wait
// accrued per interval. Realizations are independent and summed with a fixed
// order, so results are bit-reproducible.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/formulation.hpp"
#include "tdm/network.hpp"
#include "tdm/qcqp.hpp"
#include "tdm/scenario.hpp"
#include "tdm/solver.hpp"

namespace tdm {

struct MitigationPlan {
  double initiation_z = 0.0;
  std::string family = "BM";
  SolveStatus status = SolveStatus::optimal;
  double gap = 0.0;

  std::vector<double> fleet; // per disrupted-network line, floor decoded to 0
  struct Relocation {
    int from_line = -1, to_line = -1;
    double amount = 0.0;
    double unit_cost = 0.0;
    double transfer_time = 0.0;
    bool from_depot = false;
  };
  std::vector<Relocation> relocations;

  std::vector<std::vector<double>> recovery_shares; // disrupted-network paths
  std::vector<std::vector<double>> pre_shares;      // no-relocation assignment
  std::vector<std::vector<double>> normal_shares;   // normal-network paths

  double operator_cost_dollars = 0.0; // 2*alpha*sum(c x), unconditional
  double tail_probability = 1.0;      // duration mass that triggers relocation
  double backup_vehicles_raw = 0.0;
  int backup_vehicles = 0;
  std::vector<std::string> flags; // decode-time warnings

  // Model-reported column group.
  double model_user_dollars = 0.0;
  double model_operator_dollars = 0.0;
  double model_total_dollars = 0.0;
};

// Turns a solver incumbent into an executable plan. Fleet values parked at
// the epsilon floor read as "line not operated"; the backup-vehicle count is
// the rounded depot outflow while costs keep the fractional flows.
inline MitigationPlan decode_plan(const Solution& sol, const QcqpInstance& ins,
                                  const TransitNetwork& disrupted,
                                  const ReferenceAssignments& refs, double z,
                                  const Scenario& scenario) {
  if (!sol.has_incumbent()) fail_solver("cannot decode a plan without an incumbent");
  MitigationPlan plan;
  plan.initiation_z = z;
  plan.family = ins.family;
  plan.status = sol.status;
  plan.gap = sol.gap;
  plan.tail_probability = ins.tail_probability;

  plan.fleet.assign(disrupted.lines.size(), 0.0);
  for (const auto& lv : ins.line_vars) {
    double y = sol.x[lv.y_var];
    if (lv.u_var >= 0 && y <= ins.epsilon + 1e-9) y = 0.0; // floor reads as off
    plan.fleet[lv.line] = y;
  }
  double depot_out = 0.0;
  for (const auto& av : ins.arc_vars) {
    double x = sol.x[av.var];
    if (x <= 1e-9) continue;
    MitigationPlan::Relocation r;
    r.from_line = av.from_line;
    r.to_line = av.to_line;
    r.amount = x;
    r.unit_cost = av.unit_cost;
    r.from_depot = av.from_depot;
    relocation_cost(disrupted.lines[av.from_line], disrupted.lines[av.to_line],
                    scenario.costs, &r.transfer_time);
    plan.relocations.push_back(r);
    if (av.from_depot) depot_out += x;
  }
  plan.backup_vehicles_raw = depot_out;
  plan.backup_vehicles = static_cast<int>(std::llround(depot_out));
  plan.operator_cost_dollars =
      2.0 * scenario.costs.alpha * ins.relocation_cost_raw(sol.x);

  auto normalized = [](std::vector<std::vector<double>> shares) {
    for (auto& row : shares) {
      double sum = 0.0;
      for (double s : row) sum += s;
      if (sum > 1e-12)
        for (double& s : row) s /= sum;
    }
    return shares;
  };
  plan.recovery_shares.resize(disrupted.paths.size());
  for (size_t w = 0; w < disrupted.paths.size(); ++w)
    plan.recovery_shares[w].assign(disrupted.paths[w].size(), 0.0);
  for (const auto& pv : ins.path_vars)
    plan.recovery_shares[pv.od][pv.path] = std::max(0.0, sol.x[pv.var]);
  // Shares must come off lines decoded as not operated; anything beyond the
  // numerical residue gets flagged.
  for (size_t w = 0; w < disrupted.paths.size(); ++w)
    for (size_t h = 0; h < disrupted.paths[w].size(); ++h) {
      double& share = plan.recovery_shares[w][h];
      if (share <= 0.0) continue;
      for (int l : disrupted.boarded_lines(disrupted.paths[w][h])) {
        if (plan.fleet[l] > 0.0) continue;
        if (share > 1e-6)
          plan.flags.push_back("share " + std::to_string(share) + " on OD " +
                               disrupted.od_pairs[w].key +
                               " rides switched-off line '" +
                               disrupted.lines[l].id + "'");
        share = 0.0;
        break;
      }
    }
  plan.recovery_shares = normalized(plan.recovery_shares);
  plan.pre_shares = normalized(refs.p_disrupted);
  plan.normal_shares = normalized(refs.p_normal);

  plan.model_user_dollars = ins.user_cost_dollars(sol.x);
  plan.model_operator_dollars = ins.operator_cost_dollars(sol.x);
  plan.model_total_dollars = ins.total_cost_dollars(sol.x);
  return plan;
}

struct EvaluationReport {
  double expected_user_cost = 0.0; // dollars, duration-weighted
  double operator_cost = 0.0;      // dollars, expected
  double total = 0.0;
  std::vector<std::pair<double, double>> per_realization; // (T, user cost $)
  int backup_vehicles = 0;
  double z = 0.0;
  double max_mass_error = 0.0; // worst conservation residual over realizations
};

namespace detail_eval {

enum class Phase { pre, recovery, normal };

struct PhaseView {
  const TransitNetwork* net = nullptr;
  const std::vector<std::vector<double>>* shares = nullptr;
  std::vector<double> fleet; // per line of net
};

// Fleet in force during the recovery period at time t: donors give up their
// vehicles at the initiation time, receivers gain them once the transfer
// time has elapsed.
inline std::vector<double> recovery_fleet(const MitigationPlan& plan,
                                          const TransitNetwork& disrupted,
                                          double z, double t) {
  std::vector<double> y = base_fleet_vector(disrupted);
  for (const auto& r : plan.relocations) {
    y[r.from_line] -= r.amount;
    if (t >= z + r.transfer_time - 1e-9) y[r.to_line] += r.amount;
  }
  for (double& v : y) v = std::max(0.0, v);
  return y;
}

} // namespace detail_eval

// Expected user cost per the duration pmf. For each realization, users arrive
// per the demand pattern, split over paths by the phase assignment, board
// first-come-first-served against per-interval segment capacities, pay the
// deterministic path cost at boarding, and pay the wait penalty per interval
// spent queued. Queues pool and re-split whenever the phase changes.
inline EvaluationReport evaluate(const MitigationPlan& plan, const Scenario& scenario,
                                 const TransitNetwork& normal_net,
                                 const TransitNetwork& disrupted_net) {
  using detail_eval::Phase;
  const double I = scenario.time.sim_interval;
  const double H = scenario.time.horizon;
  const double beta = scenario.costs.beta;
  const double gamma = scenario.costs.gamma;
  const double eps = scenario.solver.epsilon;
  const double z = plan.initiation_z;
  const int n_intervals = static_cast<int>(std::llround(H / I));
  auto dist = scenario.duration();

  // Plans must not route mass onto lines they do not operate.
  auto check_consistency = [&](const TransitNetwork& net,
                               const std::vector<std::vector<double>>& shares,
                               const std::vector<double>& fleet,
                               const std::string& label) {
    for (size_t w = 0; w < net.paths.size(); ++w)
      for (size_t h = 0; h < net.paths[w].size(); ++h) {
        if (shares[w][h] <= 1e-9) continue;
        for (int l : net.boarded_lines(net.paths[w][h]))
          if (fleet[l] < eps)
            fail_infeasible("plan routes " + label + " users over unserved line '" +
                            net.lines[l].id + "'");
      }
  };
  check_consistency(disrupted_net, plan.pre_shares,
                    base_fleet_vector(disrupted_net), "pre-initiation");
  check_consistency(normal_net, plan.normal_shares, base_fleet_vector(normal_net),
                    "recovered");
  if (plan.tail_probability > 0.0) {
    auto yfull = detail_eval::recovery_fleet(plan, disrupted_net, z, z + 1e9);
    check_consistency(disrupted_net, plan.recovery_shares, yfull, "recovery");
  }

  EvaluationReport rep;
  rep.z = z;
  rep.backup_vehicles = plan.backup_vehicles;

  for (size_t ti = 0; ti < dist.support.size(); ++ti) {
    double T = dist.support[ti];
    double g = dist.pmf[ti];
    if (g <= 0.0) continue;
    bool relocated = T > z + 1e-9; // outages over by z trigger nothing

    std::vector<std::vector<double>> queue; // per OD, per current-phase path
    Phase phase = Phase::pre;
    bool phase_initialized = false;
    detail_eval::PhaseView view;
    double board_cost = 0.0, wait_cost = 0.0;
    double arrived = 0.0, boarded = 0.0;

    auto phase_at = [&](double t) {
      if (t >= T - 1e-9) return Phase::normal;
      if (relocated && t >= z - 1e-9) return Phase::recovery;
      return Phase::pre;
    };
    auto make_view = [&](Phase p, double t) {
      detail_eval::PhaseView v;
      switch (p) {
        case Phase::pre:
          v.net = &disrupted_net;
          v.shares = &plan.pre_shares;
          v.fleet = base_fleet_vector(disrupted_net);
          break;
        case Phase::recovery:
          v.net = &disrupted_net;
          v.shares = &plan.recovery_shares;
          v.fleet = detail_eval::recovery_fleet(plan, disrupted_net, z, t);
          break;
        case Phase::normal:
          v.net = &normal_net;
          v.shares = &plan.normal_shares;
          v.fleet = base_fleet_vector(normal_net);
          break;
      }
      return v;
    };

    for (int k = 0; k < n_intervals; ++k) {
      double t0 = k * I;
      Phase now = phase_at(t0);
      if (!phase_initialized || now != phase) {
        // Pool per-OD queued mass and re-split it by the new assignment.
        std::vector<double> pooled(disrupted_net.od_pairs.size(), 0.0);
        if (phase_initialized)
          for (size_t w = 0; w < queue.size(); ++w)
            for (double m : queue[w]) pooled[w] += m;
        view = make_view(now, t0);
        phase = now;
        phase_initialized = true;
        queue.assign(view.net->paths.size(), {});
        for (size_t w = 0; w < view.net->paths.size(); ++w) {
          queue[w].assign(view.net->paths[w].size(), 0.0);
          for (size_t h = 0; h < queue[w].size(); ++h)
            queue[w][h] = pooled[w] * (*view.shares)[w][h];
        }
      } else if (phase == Phase::recovery) {
        view.fleet = detail_eval::recovery_fleet(plan, disrupted_net, z, t0);
      }

      // Arrivals split by the phase assignment.
      for (size_t w = 0; w < view.net->od_pairs.size(); ++w) {
        double a = integrate_demand(scenario.od_demand[w], t0,
                                    std::min(H, t0 + I), H);
        arrived += a;
        for (size_t h = 0; h < queue[w].size(); ++h)
          queue[w][h] += a * (*view.shares)[w][h];
      }
      // Per-interval segment capacities.
      std::vector<double> remaining(view.net->segments.size(), 0.0);
      for (size_t s = 0; s < view.net->segments.size(); ++s) {
        const Segment& seg = view.net->segments[s];
        const Line& line = view.net->lines[seg.line];
        remaining[s] =
            view.fleet[seg.line] * line.vehicle_capacity * I / line.round_trip_time;
      }
      // Board in deterministic order; the flow consumes every segment it
      // crosses and pays the full path cost on boarding.
      for (size_t w = 0; w < queue.size(); ++w) {
        for (size_t h = 0; h < queue[w].size(); ++h) {
          double want = queue[w][h];
          if (want <= 1e-15) continue;
          const Path& path = view.net->paths[w][h];
          // Capacity still in transit (transfer time) leaves the path
          // unserved for now; the queue simply waits.
          bool served = true;
          for (int l : view.net->boarded_lines(path))
            served = served && view.fleet[l] >= eps;
          if (!served) continue;
          double room = want;
          for (int s : path.segs) room = std::min(room, remaining[s]);
          if (room <= 1e-15) continue;
          double cost = path_cost(*view.net, path, view.fleet, gamma, eps);
          board_cost += room * beta * cost;
          for (int s : path.segs) remaining[s] -= room;
          queue[w][h] -= room;
          boarded += room;
        }
      }
      // Queue wait accrues on everyone still waiting at the interval end.
      double queued_mass = 0.0;
      for (const auto& qw : queue)
        for (double m : qw) queued_mass += m;
      wait_cost += beta * gamma * I * queued_mass;
    }
    double final_queue = 0.0;
    for (const auto& qw : queue)
      for (double m : qw) final_queue += m;
    rep.max_mass_error = std::max(
        rep.max_mass_error, std::abs(arrived - boarded - final_queue) /
                                std::max(1.0, arrived));
    double user_cost = board_cost + wait_cost;
    rep.per_realization.push_back({T, user_cost});
    rep.expected_user_cost += g * user_cost;
  }
  rep.operator_cost = plan.tail_probability * plan.operator_cost_dollars;
  rep.total = rep.expected_user_cost + rep.operator_cost;
  return rep;
}

} // namespace tdm
