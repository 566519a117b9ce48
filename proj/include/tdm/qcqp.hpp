#pragma once

// Bilinear QCQP instance shared by the model builders, the global solver and
// the diagnostics: linear objective plus coef*p*u objective terms, linear
// rows, and u*y = 1 couplings over boxed variables.

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/lp.hpp"

namespace tdm {

enum class VarKind { path_share, fleet, inv_fleet, relocation };

struct QcqpVar {
  std::string name;
  VarKind kind = VarKind::path_share;
  double lo = 0.0, hi = 0.0;
  bool fixed_zero() const { return lo == 0.0 && hi == 0.0; }
};

struct BilinearTerm {
  double coef = 0.0;
  int p = -1; // path-share variable
  int u = -1; // inverse-fleet variable
};

struct Coupling {
  int u = -1;
  int y = -1;
};

enum class RowTag { capacity, fleet_balance, fleet_total, path_split };

inline const char* to_string(RowTag t) {
  switch (t) {
    case RowTag::capacity: return "capacity";
    case RowTag::fleet_balance: return "fleet-balance";
    case RowTag::fleet_total: return "fleet-total";
    case RowTag::path_split: return "path-split";
  }
  return "?";
}

struct QcqpRow {
  std::vector<std::pair<int, double>> coef;
  lp::Sense sense = lp::Sense::le;
  double rhs = 0.0;
  RowTag tag = RowTag::capacity;
  int entity = -1;          // segment / line / OD index, by tag
  double dual_scale = 1.0;  // solver dual * dual_scale = unscaled-row multiplier
  std::string label;
};

struct PathVarInfo {
  int var = -1;
  int od = -1;
  int path = -1; // index within the OD's path list
};

struct LineVarInfo {
  int y_var = -1;
  int u_var = -1; // -1 when the line is never boarded
  int line = -1;
  double y0 = 0.0, ymax = 0.0;
  bool depot = false;
  std::string mode;
};

struct ArcVarInfo {
  int var = -1;
  int from_line = -1, to_line = -1;
  double unit_cost = 0.0;
  bool from_depot = false;
};

struct QcqpInstance {
  std::vector<QcqpVar> vars;
  std::vector<double> obj; // linear coefficients, beta-normalized units
  double obj_constant = 0.0;
  std::vector<BilinearTerm> bilinear;
  std::vector<QcqpRow> rows;
  std::vector<Coupling> couplings;

  std::vector<PathVarInfo> path_vars;
  std::vector<LineVarInfo> line_vars;
  std::vector<ArcVarInfo> arc_vars;

  // Reporting / decode metadata. The objective is solved with beta folded
  // out (user cost in minutes, operator weight alpha/beta); multiplying any
  // objective piece by beta restores dollars.
  double beta = 1.0;
  double alpha = 1.0;
  double gamma = 1.0;
  double epsilon = 0.01;
  double tail_probability = 1.0; // duration mass at or past the initiation time
  std::string family = "BM";
  double capacity_window = 0.0; // minutes backing the capacity rows
  double initiation_z = 0.0;
  double user_constant = 0.0; // constant user cost, minute units
  bool status_quo_capacity_ok = true;

  int num_vars() const { return static_cast<int>(vars.size()); }

  double linear_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < num_vars(); ++j) v += obj[j] * x[j];
    return v;
  }
  double bilinear_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& t : bilinear) v += t.coef * x[t.p] * x[t.u];
    return v;
  }
  // Full objective including constants, in beta-normalized units.
  double objective_value(const std::vector<double>& x) const {
    return linear_value(x) + bilinear_value(x) + obj_constant;
  }
  double operator_cost_normed(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& a : arc_vars) v += obj[a.var] * x[a.var];
    return v;
  }
  double user_cost_minutes(const std::vector<double>& x) const {
    return objective_value(x) - operator_cost_normed(x);
  }
  // Dollar-denominated pieces.
  double user_cost_dollars(const std::vector<double>& x) const {
    return beta * user_cost_minutes(x);
  }
  double operator_cost_dollars(const std::vector<double>& x) const {
    return beta * operator_cost_normed(x);
  }
  double total_cost_dollars(const std::vector<double>& x) const {
    return beta * objective_value(x);
  }
  double relocation_cost_raw(const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& a : arc_vars) v += a.unit_cost * x[a.var];
    return v; // sum c_ll' x_ll', unweighted
  }

  double row_value(const QcqpRow& r, const std::vector<double>& x) const {
    double v = 0.0;
    for (auto [j, a] : r.coef) v += a * x[j];
    return v;
  }
  double max_row_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (const auto& r : rows) {
      double v = row_value(r, x) - r.rhs;
      double viol = 0.0;
      if (r.sense == lp::Sense::le) viol = std::max(0.0, v);
      else if (r.sense == lp::Sense::ge) viol = std::max(0.0, -v);
      else viol = std::abs(v);
      worst = std::max(worst, viol);
    }
    for (int j = 0; j < num_vars(); ++j) {
      worst = std::max(worst, vars[j].lo - x[j]);
      worst = std::max(worst, x[j] - vars[j].hi);
    }
    return worst;
  }
  double max_coupling_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (const auto& c : couplings)
      worst = std::max(worst, std::abs(x[c.u] * x[c.y] - 1.0));
    return worst;
  }

  // Structural completeness check; returns human-readable problems (empty
  // when the instance is well formed).
  std::vector<std::string> self_audit() const {
    std::vector<std::string> problems;
    std::vector<int> split_count, balance_count;
    int total_rows = 0;
    int max_od = -1, max_line = -1;
    for (const auto& pv : path_vars) max_od = std::max(max_od, pv.od);
    for (const auto& lv : line_vars) max_line = std::max(max_line, lv.line);
    split_count.assign(max_od + 1, 0);
    balance_count.assign(static_cast<size_t>(line_vars.size()), 0);
    for (const auto& r : rows) {
      if (r.tag == RowTag::path_split && r.entity >= 0 && r.entity <= max_od)
        ++split_count[r.entity];
      if (r.tag == RowTag::fleet_balance) {
        for (size_t i = 0; i < line_vars.size(); ++i)
          if (line_vars[i].line == r.entity) ++balance_count[i];
      }
      if (r.tag == RowTag::fleet_total) ++total_rows;
    }
    for (int w = 0; w <= max_od; ++w)
      if (split_count[w] != 1)
        problems.push_back("OD " + std::to_string(w) + " lacks its path-split row");
    for (size_t i = 0; i < line_vars.size(); ++i)
      if (balance_count[i] != 1)
        problems.push_back("line var " + std::to_string(i) + " lacks its balance row");
    if (total_rows != 1) problems.push_back("missing fleet-total row");
    for (const auto& lv : line_vars) {
      if (lv.u_var < 0) continue;
      if (vars[lv.y_var].fixed_zero()) continue; // disabled under a restriction
      bool coupled = false;
      for (const auto& c : couplings) coupled = coupled || (c.u == lv.u_var);
      if (!coupled)
        problems.push_back("boarded line " + std::to_string(lv.line) + " lacks coupling");
    }
    for (const auto& t : bilinear) {
      if (t.p < 0 || t.p >= num_vars() || t.u < 0 || t.u >= num_vars())
        problems.push_back("bilinear term references an unknown variable");
      else if (vars[t.p].kind != VarKind::path_share ||
               vars[t.u].kind != VarKind::inv_fleet)
        problems.push_back("bilinear term has wrong variable kinds");
    }
    for (const auto& r : rows)
      for (auto [j, a] : r.coef) {
        (void)a;
        if (j < 0 || j >= num_vars())
          problems.push_back("row '" + r.label + "' references an unknown variable");
      }
    return problems;
  }

  void debug_dump(std::ostream& os) const {
    os << "instance family=" << family << " vars=" << num_vars()
       << " rows=" << rows.size() << " bilinear=" << bilinear.size()
       << " couplings=" << couplings.size() << "\n";
    os << std::setprecision(10);
    os << "objective constant " << obj_constant << " (user constant " << user_constant
       << ")\n";
    for (int j = 0; j < num_vars(); ++j) {
      if (obj[j] == 0.0) continue;
      os << "  obj " << obj[j] << " * " << vars[j].name << "\n";
    }
    for (const auto& t : bilinear)
      os << "  obj " << t.coef << " * " << vars[t.p].name << " * " << vars[t.u].name
         << "\n";
    for (const auto& r : rows) {
      os << "  row[" << to_string(r.tag) << "] " << r.label << ": ";
      for (auto [j, a] : r.coef) os << (a >= 0 ? "+" : "") << a << "*" << vars[j].name << " ";
      os << (r.sense == lp::Sense::le ? "<= " : r.sense == lp::Sense::ge ? ">= " : "== ")
         << r.rhs << "\n";
    }
    for (const auto& c : couplings)
      os << "  couple " << vars[c.u].name << " * " << vars[c.y].name << " == 1\n";
    for (int j = 0; j < num_vars(); ++j)
      os << "  bounds " << vars[j].name << " in [" << vars[j].lo << ", " << vars[j].hi
         << "]\n";
  }
};

} // namespace tdm
