#pragma once

// Hand-built miniature QCQP instances plus an independent brute-force oracle.
// The oracle enumerates fleet vectors on a grid (with two local refinement
// sweeps) and prices each with its own LP over the shares and relocations,
// never touching the solver's node machinery.

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "tdm/lp.hpp"
#include "tdm/qcqp.hpp"

namespace tiny {

struct TinyLine {
  double y0 = 1.0;
  double ymax = 4.0;
  double round_trip = 2.0; // gamma*R/2 = 1 by default
  double cap_rate = 1e9;   // capacity per vehicle over the window (K*T/R)
};

struct TinyPath {
  int od = 0;
  double runtime = 0.0;
  std::vector<int> boarded; // line indices; each boarding crosses one segment
};

struct TinySpec {
  std::vector<TinyLine> lines;
  std::vector<double> od_demand;
  std::vector<TinyPath> paths;
  std::vector<std::tuple<int, int, double>> arcs; // from, to, unit cost
  double gamma = 1.0, alpha = 1.0, beta = 1.0, epsilon = 0.01;
};

inline tdm::QcqpInstance make_instance(const TinySpec& spec) {
  tdm::QcqpInstance ins;
  ins.beta = spec.beta;
  ins.alpha = spec.alpha;
  ins.gamma = spec.gamma;
  ins.epsilon = spec.epsilon;
  ins.family = "BM";
  ins.capacity_window = 1.0;

  std::vector<char> boarded(spec.lines.size(), 0);
  if (spec.gamma > 0.0)
    for (const auto& h : spec.paths)
      for (int l : h.boarded) boarded[l] = 1;

  int n_od = 0;
  for (const auto& h : spec.paths) n_od = std::max(n_od, h.od + 1);

  std::vector<int> pvar;
  for (size_t h = 0; h < spec.paths.size(); ++h) {
    tdm::QcqpVar v;
    v.name = "p" + std::to_string(h);
    v.kind = tdm::VarKind::path_share;
    v.lo = 0; v.hi = 1;
    pvar.push_back(ins.num_vars());
    ins.vars.push_back(v);
    ins.path_vars.push_back({pvar.back(), spec.paths[h].od, static_cast<int>(h)});
  }
  std::vector<int> yvar(spec.lines.size()), uvar(spec.lines.size(), -1);
  for (size_t l = 0; l < spec.lines.size(); ++l) {
    tdm::QcqpVar v;
    v.name = "y" + std::to_string(l);
    v.kind = tdm::VarKind::fleet;
    v.lo = boarded[l] ? spec.epsilon : 0.0;
    v.hi = spec.lines[l].ymax;
    yvar[l] = ins.num_vars();
    ins.vars.push_back(v);
    tdm::LineVarInfo info;
    info.y_var = yvar[l];
    info.line = static_cast<int>(l);
    info.y0 = spec.lines[l].y0;
    info.ymax = spec.lines[l].ymax;
    info.mode = "m";
    ins.line_vars.push_back(info);
  }
  for (size_t l = 0; l < spec.lines.size(); ++l) {
    if (!boarded[l]) continue;
    tdm::QcqpVar v;
    v.name = "u" + std::to_string(l);
    v.kind = tdm::VarKind::inv_fleet;
    v.lo = 1.0 / spec.lines[l].ymax;
    v.hi = 1.0 / spec.epsilon;
    uvar[l] = ins.num_vars();
    ins.vars.push_back(v);
    ins.line_vars[l].u_var = uvar[l];
    ins.couplings.push_back({uvar[l], yvar[l]});
  }
  for (const auto& [f, t, c] : spec.arcs) {
    tdm::QcqpVar v;
    v.name = "x" + std::to_string(f) + "_" + std::to_string(t);
    v.kind = tdm::VarKind::relocation;
    v.lo = 0;
    double total = 0;
    for (const auto& l : spec.lines) total += l.y0;
    v.hi = total;
    int idx = ins.num_vars();
    ins.vars.push_back(v);
    tdm::ArcVarInfo info;
    info.var = idx;
    info.from_line = f;
    info.to_line = t;
    info.unit_cost = c;
    ins.arc_vars.push_back(info);
  }

  ins.obj.assign(ins.num_vars(), 0.0);
  std::map<std::pair<int, int>, double> bilin;
  for (size_t h = 0; h < spec.paths.size(); ++h) {
    const auto& path = spec.paths[h];
    double q = spec.od_demand[path.od];
    ins.obj[pvar[h]] += q * path.runtime;
    if (spec.gamma > 0.0)
      for (int l : path.boarded)
        bilin[{pvar[h], uvar[l]}] +=
            q * spec.gamma * spec.lines[l].round_trip / 2.0;
  }
  for (const auto& [key, coef] : bilin) ins.bilinear.push_back({coef, key.first, key.second});
  for (const auto& av : ins.arc_vars)
    ins.obj[av.var] = 2.0 * (spec.alpha / spec.beta) * av.unit_cost;

  // Capacity row per line (one segment shared by everyone boarding it).
  for (size_t l = 0; l < spec.lines.size(); ++l) {
    if (spec.lines[l].cap_rate >= 1e9) continue;
    tdm::QcqpRow row;
    double f = 1.0 / spec.lines[l].cap_rate;
    for (size_t h = 0; h < spec.paths.size(); ++h)
      for (int b : spec.paths[h].boarded)
        if (b == static_cast<int>(l))
          row.coef.push_back({pvar[h], f * spec.od_demand[spec.paths[h].od]});
    if (row.coef.empty()) continue;
    row.coef.push_back({yvar[l], -1.0});
    row.sense = tdm::lp::Sense::le;
    row.rhs = 0;
    row.tag = tdm::RowTag::capacity;
    row.entity = static_cast<int>(l);
    row.dual_scale = f;
    row.label = "capacity[" + std::to_string(l) + "]";
    ins.rows.push_back(row);
  }
  for (size_t l = 0; l < spec.lines.size(); ++l) {
    tdm::QcqpRow row;
    for (const auto& av : ins.arc_vars) {
      if (av.from_line == static_cast<int>(l)) row.coef.push_back({av.var, 1.0});
      if (av.to_line == static_cast<int>(l)) row.coef.push_back({av.var, -1.0});
    }
    row.coef.push_back({yvar[l], 1.0});
    row.sense = tdm::lp::Sense::eq;
    row.rhs = spec.lines[l].y0;
    row.tag = tdm::RowTag::fleet_balance;
    row.entity = static_cast<int>(l);
    row.label = "fleet-balance[" + std::to_string(l) + "]";
    ins.rows.push_back(row);
  }
  {
    tdm::QcqpRow row;
    double total = 0;
    for (size_t l = 0; l < spec.lines.size(); ++l) {
      row.coef.push_back({yvar[l], 1.0});
      total += spec.lines[l].y0;
    }
    row.sense = tdm::lp::Sense::eq;
    row.rhs = total;
    row.tag = tdm::RowTag::fleet_total;
    row.entity = 0;
    row.label = "fleet-total";
    ins.rows.push_back(row);
  }
  for (int w = 0; w < n_od; ++w) {
    tdm::QcqpRow row;
    for (size_t h = 0; h < spec.paths.size(); ++h)
      if (spec.paths[h].od == w) row.coef.push_back({pvar[h], 1.0});
    row.sense = tdm::lp::Sense::eq;
    row.rhs = 1;
    row.tag = tdm::RowTag::path_split;
    row.entity = w;
    row.label = "path-split[" + std::to_string(w) + "]";
    ins.rows.push_back(row);
  }
  return ins;
}

// Oracle inner LP: shares and relocations priced at a fixed fleet, written
// against the instance data directly.
inline double oracle_price_fleet(const tdm::QcqpInstance& ins,
                                 const std::vector<double>& y_by_line,
                                 std::vector<double>* x_out = nullptr) {
  tdm::lp::Problem prob;
  std::vector<int> sub(ins.num_vars(), -1);
  std::vector<double> uval(ins.num_vars(), 0.0);
  for (size_t i = 0; i < ins.line_vars.size(); ++i) {
    const auto& lv = ins.line_vars[i];
    if (lv.u_var >= 0)
      uval[lv.u_var] = y_by_line[i] >= ins.epsilon ? 1.0 / y_by_line[i] : -1.0;
  }
  for (const auto& pv : ins.path_vars)
    sub[pv.var] = prob.add_var(ins.vars[pv.var].lo, ins.vars[pv.var].hi,
                               ins.obj[pv.var]);
  for (const auto& av : ins.arc_vars)
    sub[av.var] =
        prob.add_var(ins.vars[av.var].lo, ins.vars[av.var].hi, ins.obj[av.var]);
  for (const auto& t : ins.bilinear) {
    int v = sub[t.p];
    if (uval[t.u] < 0.0) prob.set_bounds(v, 0.0, 0.0); // dead line
    else prob.set_objective(v, prob.obj()[v] + t.coef * uval[t.u]);
  }
  std::vector<double> yfull(ins.num_vars(), 0.0);
  for (size_t i = 0; i < ins.line_vars.size(); ++i)
    yfull[ins.line_vars[i].y_var] = y_by_line[i];
  for (const auto& row : ins.rows) {
    std::vector<std::pair<int, double>> coef;
    double rhs = row.rhs;
    for (auto [j, a] : row.coef) {
      if (sub[j] >= 0) coef.push_back({sub[j], a});
      else rhs -= a * yfull[j];
    }
    if (coef.empty()) {
      bool ok = (row.sense == tdm::lp::Sense::le && rhs >= -1e-7) ||
                (row.sense == tdm::lp::Sense::ge && rhs <= 1e-7) ||
                (row.sense == tdm::lp::Sense::eq && std::abs(rhs) <= 1e-7);
      if (!ok) return std::numeric_limits<double>::infinity();
      continue;
    }
    prob.add_row(coef, row.sense, rhs);
  }
  auto res = tdm::lp::solve(prob);
  if (res.status != tdm::lp::Status::optimal)
    return std::numeric_limits<double>::infinity();
  if (x_out) {
    x_out->assign(ins.num_vars(), 0.0);
    for (int j = 0; j < ins.num_vars(); ++j)
      if (sub[j] >= 0) (*x_out)[j] = res.x[sub[j]];
    for (size_t i = 0; i < ins.line_vars.size(); ++i)
      (*x_out)[ins.line_vars[i].y_var] = y_by_line[i];
    for (size_t i = 0; i < ins.line_vars.size(); ++i) {
      const auto& lv = ins.line_vars[i];
      if (lv.u_var >= 0)
        (*x_out)[lv.u_var] = uval[lv.u_var] > 0 ? uval[lv.u_var] : ins.vars[lv.u_var].hi;
    }
  }
  return res.objective + ins.obj_constant;
}

struct OracleResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> best_y; // by line var order
  std::vector<double> best_x; // full variable vector
};

// Grid search over fleet vectors respecting the per-mode totals: every line
// but the last in a mode scans its box, the last takes the residual. A
// coarse pass locates the basin, two refinements sharpen it.
inline OracleResult oracle_minimum(const tdm::QcqpInstance& ins, double coarse = 0.25) {
  size_t L = ins.line_vars.size();
  std::map<std::string, std::vector<size_t>> modes;
  std::map<std::string, double> target;
  for (size_t i = 0; i < L; ++i) {
    modes[ins.line_vars[i].mode].push_back(i);
    target[ins.line_vars[i].mode] += ins.line_vars[i].y0;
  }
  OracleResult best;
  std::vector<double> y(L, 0.0);

  std::vector<double> center_lo(L), center_hi(L);
  for (size_t i = 0; i < L; ++i) {
    center_lo[i] = ins.vars[ins.line_vars[i].y_var].lo;
    center_hi[i] = ins.vars[ins.line_vars[i].y_var].hi;
  }

  auto sweep = [&](double step) {
    std::vector<std::pair<std::string, std::vector<size_t>>> mode_list(modes.begin(),
                                                                       modes.end());
    auto rec_mode = [&](auto&& self, size_t mi) -> void {
      if (mi == mode_list.size()) {
        std::vector<double> xfull;
        double v = oracle_price_fleet(ins, y, &xfull);
        if (v < best.value) {
          best.value = v;
          best.best_y = y;
          best.best_x = xfull;
        }
        return;
      }
      const auto& group = mode_list[mi].second;
      double tgt = target[mode_list[mi].first];
      auto rec_line = [&](auto&& lself, size_t gi, double used) -> void {
        if (gi + 1 == group.size()) {
          size_t i = group[gi];
          double rest = tgt - used;
          double lo = center_lo[i], hi = center_hi[i];
          if (rest < lo - 1e-9 || rest > hi + 1e-9) return;
          y[i] = std::clamp(rest, lo, hi);
          self(self, mi + 1);
          return;
        }
        size_t i = group[gi];
        double lo = center_lo[i], hi = center_hi[i];
        // Candidate values: both ends plus the step multiples in between, so
        // base fleets sitting on the step grid are always visited.
        std::vector<double> cand{lo};
        for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9; v += step)
          if (v > lo + 1e-12 && v < hi - 1e-12) cand.push_back(v);
        if (hi > lo + 1e-12) cand.push_back(hi);
        for (double v : cand) {
          y[i] = v;
          if (used + y[i] > tgt + 1e-9) break;
          lself(lself, gi + 1, used + y[i]);
        }
      };
      rec_line(rec_line, 0, 0.0);
    };
    rec_mode(rec_mode, 0);
  };

  sweep(coarse);
  // Two refinement passes around the incumbent grid point.
  double step = coarse;
  for (int pass = 0; pass < 2 && !best.best_y.empty(); ++pass) {
    for (size_t i = 0; i < L; ++i) {
      center_lo[i] = std::max(ins.vars[ins.line_vars[i].y_var].lo, best.best_y[i] - step);
      center_hi[i] = std::min(ins.vars[ins.line_vars[i].y_var].hi, best.best_y[i] + step);
    }
    step /= 10.0;
    sweep(step);
  }
  return best;
}

// Deterministic generator of random tiny instances (<= 3 lines, <= 2 ODs,
// <= 3 paths per OD, <= 2 priced relocation arcs plus a free backbone).
inline TinySpec random_spec(unsigned seed) {
  std::mt19937 rng(seed);
  auto uni = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  TinySpec spec;
  int n_lines = pick(2, 3);
  for (int l = 0; l < n_lines; ++l) {
    TinyLine line;
    // Base fleets snap to the quarter grid the oracle scans.
    line.y0 = 0.25 * pick(2, 12);
    line.ymax = line.y0 + 0.25 * pick(2, 12);
    line.round_trip = uni(1.0, 4.0);
    line.cap_rate = uni(20.0, 120.0);
    spec.lines.push_back(line);
  }
  int n_od = pick(1, 2);
  for (int w = 0; w < n_od; ++w) spec.od_demand.push_back(uni(20.0, 90.0));
  for (int w = 0; w < n_od; ++w) {
    int n_paths = pick(1, 3);
    for (int h = 0; h < n_paths; ++h) {
      TinyPath path;
      path.od = w;
      path.runtime = uni(5.0, 30.0);
      path.boarded.push_back(pick(0, n_lines - 1));
      if (pick(0, 2) == 0) {
        int second = pick(0, n_lines - 1);
        if (second != path.boarded[0]) path.boarded.push_back(second);
      }
      spec.paths.push_back(path);
    }
  }
  // Up to two priced relocation arcs; unreachable fleet vectors simply price
  // to infinity for both the oracle and the solver.
  int n_arcs = pick(1, 2);
  for (int i = 0; i < n_arcs; ++i) {
    int a = pick(0, n_lines - 1), b = pick(0, n_lines - 1);
    if (a == b) continue;
    bool dup = false;
    for (auto& [f, t, c] : spec.arcs) dup = dup || (f == a && t == b);
    if (!dup) spec.arcs.push_back({a, b, uni(5.0, 200.0)});
  }
  return spec;
}

// A demand-capacity sanity pass: every OD must be coverable at the base
// fleet. Tiny specs failing the check are skipped by the callers.
inline bool base_feasible(const tdm::QcqpInstance& ins) {
  std::vector<double> y0;
  for (const auto& lv : ins.line_vars) y0.push_back(std::max(lv.y0, ins.epsilon));
  return std::isfinite(oracle_price_fleet(ins, y0));
}

} // namespace tiny
