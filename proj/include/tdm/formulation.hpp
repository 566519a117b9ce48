#pragma once

// Translates a disrupted network plus scenario into bilinear QCQP instances:
// the deterministic-duration resource allocation model, its fixed-initiation
// stochastic variant, and the strategy-family restrictions layered on top.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/lp.hpp"
#include "tdm/network.hpp"
#include "tdm/qcqp.hpp"
#include "tdm/scenario.hpp"

namespace tdm {

enum class StrategyFamily { LLA, BB, BM };

inline const char* to_string(StrategyFamily f) {
  switch (f) {
    case StrategyFamily::LLA: return "LLA";
    case StrategyFamily::BB: return "BB";
    case StrategyFamily::BM: return "BM";
  }
  return "?";
}

inline std::optional<StrategyFamily> family_from_string(const std::string& s) {
  if (s == "LLA") return StrategyFamily::LLA;
  if (s == "BB") return StrategyFamily::BB;
  if (s == "BM") return StrategyFamily::BM;
  return std::nullopt;
}

struct RelocationArc {
  int from_line = -1, to_line = -1;
  double unit_cost = 0.0;
  double transfer_time = 0.0; // tD, minutes until relocated capacity arrives
  bool from_depot = false;
};

// Arc cost class resolution: short-turn arcs are line -> own short-turn
// candidate; depot arcs take the backup-transfer class; everything else is a
// plain within-mode line transfer.
inline std::string arc_class(const Line& from, const Line& to) {
  if (from.kind == LineKind::depot) return "depot_transfer";
  if (to.kind == LineKind::emergency &&
      to.emergency_kind == EmergencyKind::short_turn && to.parent == from.id)
    return "short_turn";
  return "line_transfer";
}

inline double relocation_cost(const Line& from, const Line& to, const CostParams& costs,
                              double* transfer_time_out = nullptr) {
  if (from.mode != to.mode)
    fail_schema("relocation arc crosses modes: '" + from.id + "' -> '" + to.id + "'");
  std::string cls = arc_class(from, to);
  if (costs.use_components) {
    std::string key = from.mode + "." + cls;
    auto it = costs.components.find(key);
    if (it == costs.components.end()) it = costs.components.find(cls);
    if (it == costs.components.end())
      fail_schema("no relocation cost components for class '" + key + "'");
    if (transfer_time_out) *transfer_time_out = it->second.tD;
    return it->second.total();
  }
  if (transfer_time_out) *transfer_time_out = 0.0;
  if (from.mode == "bus") {
    if (cls == "depot_transfer") return costs.bus_backup_transfer;
    return costs.bus_line_transfer;
  }
  if (from.mode == "metro") {
    if (cls == "short_turn") return costs.metro_short_turn;
    return costs.metro_line_transfer;
  }
  // Other modes fall back to the line-transfer preset of buses.
  return costs.bus_line_transfer;
}

// Full relocation arc set: regular lines and depots donate to every other
// non-depot line of their mode. Emergency lines hold no fleet of their own
// and never originate arcs.
inline std::vector<RelocationArc> generate_arcs(const TransitNetwork& net,
                                                const CostParams& costs) {
  std::vector<RelocationArc> arcs;
  for (size_t f = 0; f < net.lines.size(); ++f) {
    const Line& from = net.lines[f];
    if (from.kind == LineKind::emergency) continue;
    for (size_t t = 0; t < net.lines.size(); ++t) {
      if (f == t) continue;
      const Line& to = net.lines[t];
      if (to.kind == LineKind::depot) continue;
      if (to.mode != from.mode) continue;
      RelocationArc a;
      a.from_line = static_cast<int>(f);
      a.to_line = static_cast<int>(t);
      a.from_depot = from.kind == LineKind::depot;
      a.unit_cost = relocation_cost(from, to, costs, &a.transfer_time);
      arcs.push_back(a);
    }
  }
  return arcs;
}

inline bool family_allows(StrategyFamily fam, const TransitNetwork& net,
                          const RelocationArc& arc) {
  const Line& from = net.lines[arc.from_line];
  const Line& to = net.lines[arc.to_line];
  bool short_turn_own = to.kind == LineKind::emergency &&
                        to.emergency_kind == EmergencyKind::short_turn &&
                        to.parent == from.id;
  bool bridging = to.kind == LineKind::emergency &&
                  to.emergency_kind == EmergencyKind::bridging &&
                  (from.kind == LineKind::regular || from.kind == LineKind::depot);
  switch (fam) {
    case StrategyFamily::LLA: return short_turn_own;
    case StrategyFamily::BB: return short_turn_own || bridging;
    case StrategyFamily::BM: return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Path-share LP: user assignment at a fixed fleet. Backs the status-quo
// feasibility probe and the normal/disrupted reference assignments.
// ---------------------------------------------------------------------------

struct PathShareResult {
  bool feasible = false;
  std::string message;
  std::vector<std::vector<double>> shares; // per OD, per path
  std::vector<double> od_cost;             // share-weighted path cost, minutes
  double total_user_minutes = 0.0;         // sum_w Q_w * od_cost_w
};

inline PathShareResult solve_path_shares(const TransitNetwork& net,
                                         const Scenario& scenario,
                                         const std::vector<double>& fleet,
                                         double window) {
  PathShareResult out;
  const double eps = scenario.solver.epsilon;
  const double H = scenario.time.horizon;
  lp::Problem prob;
  std::vector<std::vector<int>> pvar(net.od_pairs.size());
  std::vector<double> q(net.od_pairs.size());
  std::map<int, std::vector<std::pair<int, double>>> seg_rows; // segment -> (var, Q)

  for (size_t w = 0; w < net.od_pairs.size(); ++w) {
    q[w] = integrate_demand(scenario.od_demand[w], 0.0, window, H);
    bool any = false;
    for (size_t h = 0; h < net.paths[w].size(); ++h) {
      const Path& path = net.paths[w][h];
      bool usable = true;
      for (int l : net.boarded_lines(path)) usable = usable && fleet[l] >= eps;
      if (!usable) {
        pvar[w].push_back(-1);
        continue;
      }
      any = true;
      double cost = path_cost(net, path, fleet, scenario.costs.gamma, eps);
      int v = prob.add_var(0.0, 1.0, q[w] * cost);
      pvar[w].push_back(v);
      for (int s : path.segs) seg_rows[s].push_back({v, q[w]});
    }
    if (!any) {
      out.message = "OD pair " + net.od_pairs[w].key + " has no served path";
      return out;
    }
    std::vector<std::pair<int, double>> row;
    for (int v : pvar[w])
      if (v >= 0) row.push_back({v, 1.0});
    prob.add_row(row, lp::Sense::eq, 1.0);
  }
  for (auto& [s, entries] : seg_rows) {
    const Segment& seg = net.segments[s];
    const Line& line = net.lines[seg.line];
    double cap = line.vehicle_capacity * window / line.round_trip_time * fleet[seg.line];
    prob.add_row(entries, lp::Sense::le, cap);
  }
  auto res = lp::solve(prob);
  if (res.status != lp::Status::optimal) {
    out.message = "no capacity-feasible assignment at the given fleet";
    return out;
  }
  out.feasible = true;
  out.shares.resize(net.od_pairs.size());
  out.od_cost.assign(net.od_pairs.size(), 0.0);
  for (size_t w = 0; w < net.od_pairs.size(); ++w) {
    out.shares[w].assign(net.paths[w].size(), 0.0);
    for (size_t h = 0; h < net.paths[w].size(); ++h) {
      int v = pvar[w][h];
      if (v < 0) continue;
      out.shares[w][h] = res.x[v];
      if (res.x[v] > 0.0)
        out.od_cost[w] += res.x[v] * path_cost(net, net.paths[w][h], fleet,
                                               scenario.costs.gamma, eps);
    }
    out.total_user_minutes += q[w] * out.od_cost[w];
  }
  return out;
}

inline std::vector<double> base_fleet_vector(const TransitNetwork& net) {
  std::vector<double> y;
  for (const auto& l : net.lines) y.push_back(l.base_fleet);
  return y;
}

// Per-OD reference assignments and costs: undisrupted system and disrupted
// system without relocation, both at the base fleet.
struct ReferenceAssignments {
  std::vector<std::vector<double>> p_normal;    // on the normal network's paths
  std::vector<std::vector<double>> p_disrupted; // on the disrupted network's paths
  std::vector<double> cost_normal;              // minutes per passenger
  std::vector<double> cost_disrupted;
};

// ---------------------------------------------------------------------------
// Instance builders
// ---------------------------------------------------------------------------

namespace detail_fmt {

struct Skeleton {
  QcqpInstance ins;
  std::vector<int> yvar;             // per line
  std::vector<int> uvar;             // per line, -1 when not boarded
  std::vector<std::vector<int>> pvar; // per OD, per path
  std::vector<RelocationArc> arcs;
};

// Variables, fleet rows, couplings and the relocation cost terms are common
// to both models; the caller supplies the demand weights, the capacity
// window, and the relocation cost multiplier.
inline Skeleton build_skeleton(const TransitNetwork& net, const Scenario& scenario,
                               const std::vector<double>& q_objective,
                               const std::vector<double>& q_capacity,
                               double capacity_window, double cost_multiplier) {
  const auto& costs = scenario.costs;
  const double eps = scenario.solver.epsilon;
  Skeleton sk;
  QcqpInstance& ins = sk.ins;
  ins.beta = costs.beta;
  ins.alpha = costs.alpha;
  ins.gamma = costs.gamma;
  ins.epsilon = eps;
  ins.capacity_window = capacity_window;

  // Path-share variables.
  sk.pvar.resize(net.od_pairs.size());
  for (size_t w = 0; w < net.od_pairs.size(); ++w) {
    for (size_t h = 0; h < net.paths[w].size(); ++h) {
      QcqpVar v;
      v.name = "p[" + net.od_pairs[w].key + "#" + std::to_string(h) + "]";
      v.kind = VarKind::path_share;
      v.lo = 0.0;
      v.hi = 1.0;
      int idx = ins.num_vars();
      ins.vars.push_back(v);
      sk.pvar[w].push_back(idx);
      ins.path_vars.push_back({idx, static_cast<int>(w), static_cast<int>(h)});
    }
  }
  // Boarded-line set (gamma > 0 makes every boarding a bilinear term).
  std::set<int> boarded;
  if (costs.gamma > 0.0)
    for (size_t w = 0; w < net.od_pairs.size(); ++w)
      for (const auto& h : net.paths[w])
        for (int l : net.boarded_lines(h)) boarded.insert(l);
  // Fleet variables.
  sk.yvar.assign(net.lines.size(), -1);
  sk.uvar.assign(net.lines.size(), -1);
  for (size_t l = 0; l < net.lines.size(); ++l) {
    const Line& line = net.lines[l];
    QcqpVar v;
    v.name = "y[" + line.id + "]";
    v.kind = VarKind::fleet;
    v.lo = boarded.count(static_cast<int>(l)) ? eps : 0.0;
    v.hi = line.max_fleet;
    if (v.hi < v.lo)
      fail_schema("line '" + line.id + "' max fleet below the epsilon floor");
    sk.yvar[l] = ins.num_vars();
    ins.vars.push_back(v);
    LineVarInfo info;
    info.y_var = sk.yvar[l];
    info.line = static_cast<int>(l);
    info.y0 = line.base_fleet;
    info.ymax = line.max_fleet;
    info.depot = line.kind == LineKind::depot;
    info.mode = line.mode;
    ins.line_vars.push_back(info);
  }
  for (int l : boarded) {
    const Line& line = net.lines[l];
    QcqpVar v;
    v.name = "u[" + line.id + "]";
    v.kind = VarKind::inv_fleet;
    v.lo = 1.0 / line.max_fleet;
    v.hi = 1.0 / eps;
    sk.uvar[l] = ins.num_vars();
    ins.vars.push_back(v);
    for (auto& info : ins.line_vars)
      if (info.line == l) info.u_var = sk.uvar[l];
    ins.couplings.push_back({sk.uvar[l], sk.yvar[l]});
  }
  // Relocation arcs; the upper bound is the donating mode's total fleet.
  std::map<std::string, double> mode_fleet;
  for (const auto& line : net.lines) mode_fleet[line.mode] += line.base_fleet;
  sk.arcs = generate_arcs(net, costs);
  for (const auto& arc : sk.arcs) {
    const Line& from = net.lines[arc.from_line];
    const Line& to = net.lines[arc.to_line];
    QcqpVar v;
    v.name = "x[" + from.id + ">" + to.id + "]";
    v.kind = VarKind::relocation;
    v.lo = 0.0;
    v.hi = mode_fleet[from.mode];
    int idx = ins.num_vars();
    ins.vars.push_back(v);
    ArcVarInfo info;
    info.var = idx;
    info.from_line = arc.from_line;
    info.to_line = arc.to_line;
    info.unit_cost = arc.unit_cost;
    info.from_depot = arc.from_depot;
    ins.arc_vars.push_back(info);
  }

  // Objective: run times and headway waits weighted by demand, relocation
  // costs weighted by 2*alpha/beta and the caller's multiplier.
  ins.obj.assign(ins.num_vars(), 0.0);
  std::map<std::pair<int, int>, double> bilin; // (p var, u var) -> coef
  for (size_t w = 0; w < net.od_pairs.size(); ++w) {
    for (size_t h = 0; h < net.paths[w].size(); ++h) {
      const Path& path = net.paths[w][h];
      int pv = sk.pvar[w][h];
      ins.obj[pv] += q_objective[w] * path.run_time;
      if (costs.gamma > 0.0) {
        for (int pos : path.boardings) {
          int l = net.segments[path.segs[pos]].line;
          double coef =
              q_objective[w] * costs.gamma * net.lines[l].round_trip_time / 2.0;
          bilin[{pv, sk.uvar[l]}] += coef;
        }
      }
    }
  }
  for (const auto& [key, coef] : bilin)
    ins.bilinear.push_back({coef, key.first, key.second});
  double alpha_normed = costs.alpha / costs.beta;
  for (const auto& info : ins.arc_vars) {
    const RelocationArc& arc = sk.arcs[&info - ins.arc_vars.data()];
    ins.obj[info.var] = 2.0 * alpha_normed * arc.unit_cost * cost_multiplier;
  }

  // Capacity rows for segments that can carry flow, scaled by R/(K*window)
  // to keep coefficients near unit size.
  std::map<int, std::vector<std::pair<int, double>>> seg_entries;
  for (size_t w = 0; w < net.od_pairs.size(); ++w)
    for (size_t h = 0; h < net.paths[w].size(); ++h)
      for (int s : net.paths[w][h].segs)
        seg_entries[s].push_back({sk.pvar[w][h], q_capacity[w]});
  for (const auto& [s, entries] : seg_entries) {
    const Segment& seg = net.segments[s];
    const Line& line = net.lines[seg.line];
    if (capacity_window <= 1e-9) {
      // Degenerate recovery window: no flow is assigned in it, so the rows
      // vanish (the demand weights are zero too).
      continue;
    }
    double f = line.round_trip_time / (line.vehicle_capacity * capacity_window);
    QcqpRow row;
    for (auto [v, qq] : entries)
      if (qq != 0.0) row.coef.push_back({v, f * qq});
    row.coef.push_back({sk.yvar[seg.line], -1.0});
    row.sense = lp::Sense::le;
    row.rhs = 0.0;
    row.tag = RowTag::capacity;
    row.entity = s;
    row.dual_scale = f;
    row.label = "capacity[" + seg.id + "]";
    ins.rows.push_back(std::move(row));
  }
  // Fleet balance per line.
  for (size_t l = 0; l < net.lines.size(); ++l) {
    QcqpRow row;
    for (size_t a = 0; a < sk.arcs.size(); ++a) {
      if (sk.arcs[a].from_line == static_cast<int>(l))
        row.coef.push_back({ins.arc_vars[a].var, 1.0});
      if (sk.arcs[a].to_line == static_cast<int>(l))
        row.coef.push_back({ins.arc_vars[a].var, -1.0});
    }
    row.coef.push_back({sk.yvar[l], 1.0});
    row.sense = lp::Sense::eq;
    row.rhs = net.lines[l].base_fleet;
    row.tag = RowTag::fleet_balance;
    row.entity = static_cast<int>(l);
    row.label = "fleet-balance[" + net.lines[l].id + "]";
    ins.rows.push_back(std::move(row));
  }
  // Total fleet conservation.
  {
    QcqpRow row;
    double total = 0.0;
    for (size_t l = 0; l < net.lines.size(); ++l) {
      row.coef.push_back({sk.yvar[l], 1.0});
      total += net.lines[l].base_fleet;
    }
    row.sense = lp::Sense::eq;
    row.rhs = total;
    row.tag = RowTag::fleet_total;
    row.entity = 0;
    row.label = "fleet-total";
    ins.rows.push_back(std::move(row));
  }
  // Path split per OD.
  for (size_t w = 0; w < net.od_pairs.size(); ++w) {
    QcqpRow row;
    for (int v : sk.pvar[w]) row.coef.push_back({v, 1.0});
    row.sense = lp::Sense::eq;
    row.rhs = 1.0;
    row.tag = RowTag::path_split;
    row.entity = static_cast<int>(w);
    row.label = "path-split[" + net.od_pairs[w].key + "]";
    ins.rows.push_back(std::move(row));
  }
  return sk;
}

} // namespace detail_fmt

// Deterministic-duration model over [0, T]. When the scenario horizon runs
// past T, the post-recovery user cost is a constant that needs the normal
// reference assignment; pass refs to include it (reported totals then cover
// the whole horizon, matching the stochastic variant).
inline QcqpInstance build_bm(const TransitNetwork& net, const Scenario& scenario,
                             double T, const ReferenceAssignments* refs = nullptr) {
  if (T <= 0.0) fail_schema("model duration T must be positive");
  const double H = scenario.time.horizon;
  if (T > H + 1e-9) fail_schema("model duration T exceeds the horizon");
  std::vector<double> q(net.od_pairs.size());
  for (size_t w = 0; w < net.od_pairs.size(); ++w)
    q[w] = integrate_demand(scenario.od_demand[w], 0.0, T, H);
  auto sk = detail_fmt::build_skeleton(net, scenario, q, q, T, 1.0);
  QcqpInstance ins = std::move(sk.ins);
  ins.family = "BM";
  ins.initiation_z = 0.0;
  ins.tail_probability = 1.0;
  if (refs && T < H - 1e-9) {
    double c = 0.0;
    for (size_t w = 0; w < net.od_pairs.size(); ++w)
      c += integrate_demand(scenario.od_demand[w], T, H, H) * refs->cost_normal[w];
    ins.user_constant = c;
    ins.obj_constant = c;
  }
  // Status-quo capacity probe: can the disrupted system carry the demand with
  // no relocation at all?
  auto probe = solve_path_shares(net, scenario, base_fleet_vector(net), H);
  ins.status_quo_capacity_ok = probe.feasible;
  auto problems = ins.self_audit();
  if (!problems.empty()) fail_solver("instance audit failed: " + problems.front());
  return ins;
}

// Fixed-initiation subproblem: relocation starts at z in the worlds where the
// outage outlives z, capacity must cover the conditional recovery window,
// demand weights integrate over the duration tail, and the pre/post periods
// enter as constants. The boundary reading is strict: an outage that ends
// exactly at z is over, observable, and triggers nothing (this is what makes
// waiting informative for two-point duration laws).
inline QcqpInstance build_itm_subproblem(const TransitNetwork& net,
                                         const Scenario& scenario, double z,
                                         const ReferenceAssignments& refs) {
  const double H = scenario.time.horizon;
  if (z < 0.0 || z > H + 1e-9) fail_schema("initiation time outside [0, horizon]");
  auto dist = scenario.duration();
  double tail = dist.tail_probability(z, true);
  if (tail <= 1e-15) fail_infeasible("initiation beyond duration support");
  double cond_mean = conditional_mean_duration(dist, z, true);
  double window = cond_mean - z;

  size_t W = net.od_pairs.size();
  std::vector<double> q_obj(W, 0.0), q_cap(W, 0.0);
  for (size_t w = 0; w < W; ++w) {
    const auto& pat = scenario.od_demand[w];
    for (size_t i = 0; i < dist.support.size(); ++i) {
      double T = dist.support[i], g = dist.pmf[i];
      if (g <= 0.0 || T <= z + 1e-9) continue;
      q_obj[w] += g * integrate_demand(pat, z, std::max(z, T), H);
    }
    q_cap[w] = integrate_demand(pat, z, std::min(H, cond_mean), H);
  }
  auto sk = detail_fmt::build_skeleton(net, scenario, q_obj, q_cap, window, tail);
  QcqpInstance ins = std::move(sk.ins);
  ins.family = "BM";
  ins.initiation_z = z;
  ins.tail_probability = tail;
  ins.capacity_window = window;

  // Constant user-cost branches.
  double c = 0.0;
  for (size_t w = 0; w < W; ++w) {
    const auto& pat = scenario.od_demand[w];
    double cN = refs.cost_normal[w], cD = refs.cost_disrupted[w];
    for (size_t i = 0; i < dist.support.size(); ++i) {
      double T = dist.support[i], g = dist.pmf[i];
      if (g <= 0.0) continue;
      if (T <= z + 1e-9) {
        // Disruption over by initiation time: disrupted until T, normal after.
        c += g * (integrate_demand(pat, 0.0, T, H) * cD +
                  integrate_demand(pat, T, H, H) * cN);
      } else {
        // Pre-initiation window rides the unrelocated system; the recovered
        // period returns to normal.
        c += g * (integrate_demand(pat, 0.0, z, H) * cD +
                  integrate_demand(pat, T, H, H) * cN);
      }
    }
  }
  ins.user_constant = c;
  ins.obj_constant = c;
  auto probe = solve_path_shares(net, scenario, base_fleet_vector(net), H);
  ins.status_quo_capacity_ok = probe.feasible;
  auto problems = ins.self_audit();
  if (!problems.empty()) fail_solver("instance audit failed: " + problems.front());
  return ins;
}

// Restricts an instance to a strategy family by fixing the excluded
// relocation arcs at zero. Emergency lines that no remaining arc can feed
// cannot reach the epsilon fleet floor, so they are pinned to zero along
// with the path shares that board them; their couplings are dropped.
// Objective coefficients are never touched.
inline QcqpInstance restrict(const QcqpInstance& instance, StrategyFamily family,
                             const TransitNetwork& net) {
  QcqpInstance out = instance;
  out.family = to_string(family);
  if (family == StrategyFamily::BM) return out;

  std::vector<char> arc_active(out.arc_vars.size(), 0);
  for (size_t a = 0; a < out.arc_vars.size(); ++a) {
    const auto& info = out.arc_vars[a];
    RelocationArc arc;
    arc.from_line = info.from_line;
    arc.to_line = info.to_line;
    arc.from_depot = info.from_depot;
    arc.unit_cost = info.unit_cost;
    arc_active[a] = family_allows(family, net, arc) ? 1 : 0;
    if (!arc_active[a]) out.vars[info.var].lo = out.vars[info.var].hi = 0.0;
  }
  // Funded lines: can reach the epsilon floor through base fleet or an
  // active arc from a funded donor (donors all carry base fleet, so one
  // round suffices; a fixpoint keeps this correct if that ever changes).
  std::vector<char> funded(net.lines.size(), 0);
  for (size_t l = 0; l < net.lines.size(); ++l)
    funded[l] = net.lines[l].base_fleet > 0.0 ? 1 : 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t a = 0; a < out.arc_vars.size(); ++a) {
      if (!arc_active[a]) continue;
      const auto& info = out.arc_vars[a];
      if (funded[info.from_line] && !funded[info.to_line]) {
        funded[info.to_line] = 1;
        changed = true;
      }
    }
  }
  std::set<int> disabled;
  for (const auto& lv : out.line_vars) {
    if (funded[lv.line]) continue;
    if (out.vars[lv.y_var].lo <= 0.0) continue; // no epsilon floor, fine at zero
    disabled.insert(lv.line);
    out.vars[lv.y_var].lo = out.vars[lv.y_var].hi = 0.0;
  }
  if (!disabled.empty()) {
    std::erase_if(out.couplings, [&](const Coupling& c) {
      for (const auto& lv : out.line_vars)
        if (lv.u_var == c.u && disabled.count(lv.line)) return true;
      return false;
    });
    for (const auto& pv : out.path_vars) {
      const Path& path = net.paths[pv.od][pv.path];
      for (int l : net.boarded_lines(path))
        if (disabled.count(l)) {
          out.vars[pv.var].lo = out.vars[pv.var].hi = 0.0;
          break;
        }
    }
  }
  return out;
}

} // namespace tdm
