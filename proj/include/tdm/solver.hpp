#pragma once

// Global solver for the bilinear QCQP instances: spatial branch and bound
// over the p*u objective terms and the u*y = 1 couplings. Node lower bounds
// come from an LP with McCormick envelopes over the node's boxes; incumbents
// come from fixing a fleet vector and re-solving the exact LP in the path
// shares and relocations. Single-threaded and bit-reproducible.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/lp.hpp"
#include "tdm/qcqp.hpp"

namespace tdm {

struct SolverConfig {
  double gap_tol = 1e-4;
  double time_limit_s = 300.0;
  long max_nodes = -1; // unlimited when negative
  unsigned seed = 0;   // reserved; all tie-breaking is already deterministic
  // Candidate fleet vectors (indexed like QcqpInstance::line_vars) tried as
  // incumbents before the search starts. Solutions of nested families make
  // good seeds.
  std::vector<std::vector<double>> fleet_seeds;
  // Called whenever a bound improves: elapsed seconds, LB, UB, gap, nodes.
  std::function<void(double, double, double, double, long)> on_bound_update;
};

enum class SolveStatus { optimal, time_limit, infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

// Duals recovered from the incumbent's inner LP (the capacity multipliers are
// reported against the unscaled rows).
struct DualEstimates {
  bool available = false;
  std::map<int, double> mu_capacity; // segment index -> multiplier
  std::map<int, double> vartheta;    // line index -> balance multiplier
  std::map<int, double> pi;          // OD index -> split multiplier
};

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> x; // full variable vector of the incumbent
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  long nodes = 0;
  double wall_seconds = 0.0;
  DualEstimates duals;

  bool has_incumbent() const { return std::isfinite(upper_bound); }
};

namespace detail_solver {

struct Box {
  std::vector<double> lo, hi;
};

struct Node {
  Box box;
  double bound = -std::numeric_limits<double>::infinity();
  long id = 0;
  int depth = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound; // min-heap on bound
    return a.id > b.id;
  }
};

// Interval propagation through the reciprocal couplings. Returns false on an
// empty box.
inline bool propagate(const QcqpInstance& ins, Box& box) {
  for (const auto& c : ins.couplings) {
    double ylo = box.lo[c.y], yhi = box.hi[c.y];
    double ulo = box.lo[c.u], uhi = box.hi[c.u];
    if (ylo > 0.0) uhi = std::min(uhi, 1.0 / ylo);
    if (yhi > 0.0) ulo = std::max(ulo, 1.0 / yhi);
    if (ulo > 0.0) yhi = std::min(yhi, 1.0 / ulo);
    if (uhi > 0.0) ylo = std::max(ylo, 1.0 / uhi);
    if (ulo > uhi + 1e-12 || ylo > yhi + 1e-12) return false;
    box.lo[c.y] = ylo;
    box.hi[c.y] = std::min(yhi, box.hi[c.y]);
    box.lo[c.u] = ulo;
    box.hi[c.u] = std::min(uhi, box.hi[c.u]);
  }
  return true;
}

struct RelaxResult {
  bool feasible = false;
  double value = -std::numeric_limits<double>::infinity(); // incl. constant
  std::vector<double> x; // instance variables only
  std::vector<double> w; // product variables per bilinear term
};

// LP relaxation over the node box: every objective product p*u is replaced
// by a boxed variable with its convex envelope (only the side the objective
// pulls on is needed), and each coupling contributes its four envelope rows.
inline RelaxResult lp_relaxation(const QcqpInstance& ins, const Box& box) {
  RelaxResult out;
  lp::Problem prob;
  int n = ins.num_vars();
  for (int j = 0; j < n; ++j) prob.add_var(box.lo[j], box.hi[j], ins.obj[j]);
  std::vector<int> wvar(ins.bilinear.size());
  for (size_t t = 0; t < ins.bilinear.size(); ++t) {
    const auto& term = ins.bilinear[t];
    double plo = box.lo[term.p], phi = box.hi[term.p];
    double ulo = box.lo[term.u], uhi = box.hi[term.u];
    double corners[4] = {plo * ulo, plo * uhi, phi * ulo, phi * uhi};
    double wlo = std::min({corners[0], corners[1], corners[2], corners[3]});
    double whi = std::max({corners[0], corners[1], corners[2], corners[3]});
    wvar[t] = prob.add_var(wlo, whi, term.coef);
    if (term.coef >= 0.0) {
      // Underestimators: w >= ulo*p + plo*u - ulo*plo, w >= uhi*p + phi*u - uhi*phi
      prob.add_row({{wvar[t], -1.0}, {term.p, ulo}, {term.u, plo}}, lp::Sense::le,
                   ulo * plo);
      prob.add_row({{wvar[t], -1.0}, {term.p, uhi}, {term.u, phi}}, lp::Sense::le,
                   uhi * phi);
    } else {
      // Overestimators: w <= uhi*p + plo*u - uhi*plo, w <= ulo*p + phi*u - ulo*phi
      prob.add_row({{wvar[t], 1.0}, {term.p, -uhi}, {term.u, -plo}}, lp::Sense::le,
                   -uhi * plo);
      prob.add_row({{wvar[t], 1.0}, {term.p, -ulo}, {term.u, -phi}}, lp::Sense::le,
                   -ulo * phi);
    }
  }
  for (const auto& c : ins.couplings) {
    double ylo = box.lo[c.y], yhi = box.hi[c.y];
    double ulo = box.lo[c.u], uhi = box.hi[c.u];
    // Envelopes of the product u*y pinned at 1.
    prob.add_row({{c.u, ylo}, {c.y, ulo}}, lp::Sense::le, 1.0 + ylo * ulo);
    prob.add_row({{c.u, yhi}, {c.y, uhi}}, lp::Sense::le, 1.0 + yhi * uhi);
    prob.add_row({{c.u, yhi}, {c.y, ulo}}, lp::Sense::ge, 1.0 + yhi * ulo);
    prob.add_row({{c.u, ylo}, {c.y, uhi}}, lp::Sense::ge, 1.0 + ylo * uhi);
  }
  for (const auto& row : ins.rows) prob.add_row(row.coef, row.sense, row.rhs);
  auto res = lp::solve(prob);
  if (res.status == lp::Status::iteration_limit)
    fail_solver("relaxation LP hit the iteration limit");
  if (res.status != lp::Status::optimal) return out;
  out.feasible = true;
  out.value = res.objective + ins.obj_constant;
  out.x.assign(res.x.begin(), res.x.begin() + n);
  out.w.resize(ins.bilinear.size());
  for (size_t t = 0; t < ins.bilinear.size(); ++t) out.w[t] = res.x[wvar[t]];
  return out;
}

struct InnerResult {
  bool feasible = false;
  double value = 0.0; // incl. constant
  std::vector<double> x;
  DualEstimates duals;
};

// Exact LP in (p, x) at a fixed fleet vector; a feasible result is a valid
// incumbent. Path shares that board a dead line are forced to zero.
inline InnerResult inner_lp(const QcqpInstance& ins, const std::vector<double>& y_by_var) {
  InnerResult out;
  int n = ins.num_vars();
  // u values implied by y.
  std::vector<double> uval(n, 0.0);
  std::vector<char> dead_line_u(n, 0);
  for (const auto& lv : ins.line_vars) {
    if (lv.u_var < 0) continue;
    double y = y_by_var[lv.y_var];
    if (y >= ins.epsilon) {
      uval[lv.u_var] = 1.0 / y;
    } else {
      uval[lv.u_var] = ins.vars[lv.u_var].hi;
      dead_line_u[lv.u_var] = 1;
    }
  }
  lp::Problem prob;
  std::vector<int> sub(n, -1); // instance var -> LP var (p and x only)
  for (const auto& pv : ins.path_vars) {
    double lo = ins.vars[pv.var].lo, hi = ins.vars[pv.var].hi;
    sub[pv.var] = prob.add_var(lo, hi, ins.obj[pv.var]);
  }
  for (const auto& av : ins.arc_vars)
    sub[av.var] = prob.add_var(ins.vars[av.var].lo, ins.vars[av.var].hi,
                               ins.obj[av.var]);
  // Objective contribution of the bilinear terms at fixed u; paths boarding a
  // dead line are pinned at zero.
  for (const auto& term : ins.bilinear) {
    int v = sub[term.p];
    if (v < 0) continue;
    if (dead_line_u[term.u]) {
      prob.set_bounds(v, 0.0, 0.0);
      continue;
    }
    prob.set_objective(v, prob.obj()[v] + term.coef * uval[term.u]);
  }
  struct RowRef {
    int lp_row;
    const QcqpRow* row;
  };
  std::vector<RowRef> rowrefs;
  for (const auto& row : ins.rows) {
    std::vector<std::pair<int, double>> coef;
    double rhs = row.rhs;
    for (auto [j, a] : row.coef) {
      if (sub[j] >= 0) coef.push_back({sub[j], a});
      else rhs -= a * y_by_var[j]; // fleet vars fold into the right-hand side
    }
    if (coef.empty()) {
      if ((row.sense == lp::Sense::le && rhs < -1e-7) ||
          (row.sense == lp::Sense::ge && rhs > 1e-7) ||
          (row.sense == lp::Sense::eq && std::abs(rhs) > 1e-7))
        return out; // fleet vector violates a pure-fleet row
      continue;
    }
    int r = prob.add_row(coef, row.sense, rhs);
    rowrefs.push_back({r, &row});
  }
  auto res = lp::solve(prob);
  if (res.status == lp::Status::iteration_limit)
    fail_solver("inner LP hit the iteration limit");
  if (res.status != lp::Status::optimal) return out;
  out.feasible = true;
  out.x.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (sub[j] >= 0) out.x[j] = res.x[sub[j]];
    else out.x[j] = y_by_var[j];
  }
  for (const auto& lv : ins.line_vars)
    if (lv.u_var >= 0) out.x[lv.u_var] = uval[lv.u_var];
  out.value = ins.objective_value(out.x);
  out.duals.available = true;
  for (const auto& rr : rowrefs) {
    double d = res.row_dual[rr.lp_row];
    switch (rr.row->tag) {
      case RowTag::capacity:
        out.duals.mu_capacity[rr.row->entity] = d * rr.row->dual_scale;
        break;
      case RowTag::fleet_balance:
        out.duals.vartheta[rr.row->entity] = d;
        break;
      case RowTag::path_split:
        out.duals.pi[rr.row->entity] = d;
        break;
      default: break;
    }
  }
  return out;
}

// Projects a fleet proposal into the instance's box and onto the per-mode
// conservation totals. Returns an empty vector when no consistent projection
// exists.
inline std::vector<double> project_fleet(const QcqpInstance& ins,
                                         const std::vector<double>& y_by_line_var) {
  int n = ins.num_vars();
  std::vector<double> y(n, 0.0);
  if (y_by_line_var.size() != ins.line_vars.size()) return {};
  std::map<std::string, std::vector<int>> by_mode;
  std::map<std::string, double> target;
  for (size_t i = 0; i < ins.line_vars.size(); ++i) {
    const auto& lv = ins.line_vars[i];
    double v = std::clamp(y_by_line_var[i], ins.vars[lv.y_var].lo, ins.vars[lv.y_var].hi);
    y[lv.y_var] = v;
    by_mode[lv.mode].push_back(lv.y_var);
    target[lv.mode] += lv.y0;
  }
  for (auto& [mode, vars_of_mode] : by_mode) {
    for (int pass = 0; pass < 8; ++pass) {
      double sum = 0.0;
      for (int v : vars_of_mode) sum += y[v];
      double deficit = target[mode] - sum;
      if (std::abs(deficit) <= 1e-10) break;
      double room = 0.0;
      for (int v : vars_of_mode)
        room += deficit > 0 ? (ins.vars[v].hi - y[v]) : (y[v] - ins.vars[v].lo);
      if (room <= 1e-12) return {};
      for (int v : vars_of_mode) {
        double share = deficit > 0 ? (ins.vars[v].hi - y[v]) : (y[v] - ins.vars[v].lo);
        y[v] += deficit * share / room;
      }
    }
    double sum = 0.0;
    for (int v : vars_of_mode) sum += y[v];
    if (std::abs(sum - target[mode]) > 1e-8) return {};
  }
  return y;
}

} // namespace detail_solver

inline Solution solve(const QcqpInstance& ins, const SolverConfig& config) {
  using namespace detail_solver;
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  Solution sol;
  int n = ins.num_vars();
  Box root;
  root.lo.resize(n);
  root.hi.resize(n);
  for (int j = 0; j < n; ++j) {
    root.lo[j] = ins.vars[j].lo;
    root.hi[j] = ins.vars[j].hi;
  }
  if (!propagate(ins, root)) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }

  const double kappa = [&] {
    double m = 1.0;
    for (const auto& t : ins.bilinear) m = std::max(m, std::abs(t.coef));
    return m;
  }();

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  DualEstimates best_duals;
  long nodes = 0;

  auto report = [&] {
    if (!config.on_bound_update) return;
    double gap = (std::isfinite(ub) && ub != 0.0 && std::isfinite(lb))
                     ? (ub - lb) / std::abs(ub)
                     : std::numeric_limits<double>::infinity();
    config.on_bound_update(elapsed(), lb, ub, gap, nodes);
  };

  auto try_fleet = [&](const std::vector<double>& y_by_line_var) {
    auto y = project_fleet(ins, y_by_line_var);
    if (y.empty()) return;
    auto inner = inner_lp(ins, y);
    if (!inner.feasible) return;
    if (ins.max_row_violation(inner.x) > 1e-8) return;
    if (inner.value < ub - 1e-12) {
      ub = inner.value;
      best_x = inner.x;
      best_duals = inner.duals;
      report();
    }
  };

  // Implicit status-quo seed plus caller-provided ones.
  {
    std::vector<double> y0;
    for (const auto& lv : ins.line_vars) y0.push_back(lv.y0);
    try_fleet(y0);
    for (const auto& seed : config.fleet_seeds) try_fleet(seed);
  }

  auto relaxed_fleet = [&](const std::vector<double>& x) {
    std::vector<double> y;
    for (const auto& lv : ins.line_vars) y.push_back(x[lv.y_var]);
    return y;
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> queue;
  long next_id = 0;
  {
    Node rootnode;
    rootnode.box = root;
    rootnode.id = next_id++;
    queue.push(std::move(rootnode));
  }

  // Bounds of subtrees closed without proving them empty; the global lower
  // bound is min(open queue, this floor, incumbent).
  double pruned_floor = std::numeric_limits<double>::infinity();

  bool timed_out = false;
  while (!queue.empty()) {
    Node node = queue.top();
    queue.pop();
    // Best-bound order makes this node's bound the open-tree minimum.
    lb = std::max(lb, std::min({node.bound, pruned_floor, ub}));
    if (std::isfinite(ub)) {
      double gap = (ub - lb) / std::abs(ub);
      if (gap <= config.gap_tol) break;
    }
    if (config.time_limit_s > 0 && elapsed() > config.time_limit_s) {
      timed_out = true;
      break;
    }
    if (config.max_nodes > 0 && nodes >= config.max_nodes) {
      timed_out = true;
      break;
    }
    ++nodes;
    auto relax = lp_relaxation(ins, node.box);
    if (!relax.feasible) continue;
    double value = std::max(relax.value, node.bound);
    if (std::isfinite(ub) && value >= ub - config.gap_tol * std::abs(ub) - 1e-12) {
      // Cannot improve past the tolerance.
      pruned_floor = std::min(pruned_floor, value);
      continue;
    }
    double old_ub = ub;
    try_fleet(relaxed_fleet(relax.x));
    if (ub < old_ub) report();

    // Most-violated bilinear relation picks the branching variable.
    int branch_var = -1;
    double worst = 1e-7;
    for (size_t t = 0; t < ins.bilinear.size(); ++t) {
      const auto& term = ins.bilinear[t];
      double v = std::abs(relax.w[t] - relax.x[term.p] * relax.x[term.u]) *
                 std::max(std::abs(term.coef), 1e-12);
      if (v > worst) {
        worst = v;
        branch_var = (node.box.hi[term.u] - node.box.lo[term.u] > 1e-7) ? term.u
                                                                        : term.p;
      }
    }
    for (const auto& c : ins.couplings) {
      double v = std::abs(relax.x[c.u] * relax.x[c.y] - 1.0) * kappa;
      if (v > worst) {
        worst = v;
        branch_var = (node.box.hi[c.u] - node.box.lo[c.u] > 1e-7) ? c.u : c.y;
      }
    }
    if (branch_var < 0 || node.box.hi[branch_var] - node.box.lo[branch_var] <= 1e-9) {
      // Envelope-exact node: the relaxation value is attainable, so the
      // incumbent attempt above already captured it.
      pruned_floor = std::min(pruned_floor, value);
      continue;
    }
    double wlo = node.box.lo[branch_var], whi = node.box.hi[branch_var];
    double split = std::clamp(relax.x[branch_var], wlo + 0.1 * (whi - wlo),
                              whi - 0.1 * (whi - wlo));
    for (int side = 0; side < 2; ++side) {
      Node child;
      child.box = node.box;
      child.depth = node.depth + 1;
      if (side == 0) child.box.hi[branch_var] = split;
      else child.box.lo[branch_var] = split;
      if (!propagate(ins, child.box)) continue;
      child.bound = value;
      child.id = next_id++;
      queue.push(std::move(child));
    }
  }

  if (queue.empty() && !timed_out) {
    // Tree exhausted; only closed subtrees bound the optimum from below.
    lb = std::max(lb, std::min({pruned_floor, ub}));
    if (!std::isfinite(pruned_floor) && std::isfinite(ub)) lb = ub;
  } else if (!queue.empty()) {
    lb = std::max(lb, std::min({queue.top().bound, pruned_floor, ub}));
  }

  sol.nodes = nodes;
  sol.wall_seconds = elapsed();
  if (!std::isfinite(ub)) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }
  sol.x = best_x;
  sol.upper_bound = ub;
  sol.lower_bound = std::min(lb, ub);
  sol.gap = ub != 0.0 ? (ub - sol.lower_bound) / std::abs(ub) : 0.0;
  sol.duals = best_duals;
  sol.status = (sol.gap <= config.gap_tol + 1e-15) ? SolveStatus::optimal
                                                   : SolveStatus::time_limit;
  report();
  return sol;
}

} // namespace tdm
