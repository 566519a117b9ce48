#pragma once

// Dense bounded-variable two-phase primal simplex.
//
// Solves   min c'x   s.t.  a_i'x {<=,=,>=} b_i,   lo <= x <= hi.
//
// Row duals follow the convention  L(x, d) = c'x + sum_i d_i (a_i'x - b_i),
// so at an optimum d_i >= 0 for tight <= rows and d_i <= 0 for tight >= rows.
// Sized for problems up to a few hundred rows; everything is dense.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tdm::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { le, eq, ge };

enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "?";
}

struct Tolerances {
  double feas = 1e-9;   // primal feasibility / phase-1 acceptance
  double opt = 1e-9;    // reduced-cost optimality
  double pivot = 1e-10; // minimum usable pivot magnitude
};

class Problem {
 public:
  struct Row {
    std::vector<std::pair<int, double>> coef;
    Sense sense = Sense::le;
    double rhs = 0.0;
  };

  int add_var(double lo, double hi, double obj = 0.0) {
    if (lo > hi + 1e-15) throw std::invalid_argument("lp: var lo > hi");
    lo_.push_back(lo);
    hi_.push_back(hi);
    c_.push_back(obj);
    return static_cast<int>(lo_.size()) - 1;
  }

  void set_objective(int v, double obj) { c_.at(v) = obj; }
  void set_bounds(int v, double lo, double hi) {
    if (lo > hi + 1e-15) throw std::invalid_argument("lp: var lo > hi");
    lo_.at(v) = lo;
    hi_.at(v) = hi;
  }

  int add_row(std::vector<std::pair<int, double>> coef, Sense s, double rhs) {
    for (auto& [v, a] : coef) {
      if (v < 0 || v >= num_vars()) throw std::out_of_range("lp: bad var in row");
      (void)a;
    }
    rows_.push_back(Row{std::move(coef), s, rhs});
    return static_cast<int>(rows_.size()) - 1;
  }

  int num_vars() const { return static_cast<int>(lo_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<double>& obj() const { return c_; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<double> lo_, hi_, c_;
  std::vector<Row> rows_;
};

struct Result {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;            // structural variable values
  std::vector<double> row_dual;     // see sign convention above
  std::vector<double> reduced_cost; // structural reduced costs (c + A'd)
  long iterations = 0;
};

namespace detail {

class Simplex {
 public:
  Simplex(const Problem& p, Tolerances tol) : p_(p), tol_(tol) {
    n_ = p.num_vars();
    m_ = p.num_rows();
    nslack_ = m_;
    nart_ = m_;
    ncols_ = n_ + nslack_ + nart_;
    rhs_col_ = ncols_; // extra column carries B^-1 b
  }

  Result run() {
    build();
    Result res;
    // Phase 1: minimize sum of artificials.
    set_phase_costs(true);
    Status s1 = iterate(true);
    res.iterations = iters_;
    if (s1 == Status::iteration_limit) {
      res.status = s1;
      return res;
    }
    refresh_basics();
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= art0_) infeas += std::abs(beta_[i]);
    for (int j = art0_; j < ncols_; ++j)
      if (state_[j] != kBasic) infeas += std::abs(value_of_nonbasic(j));
    if (infeas > phase1_tol()) {
      res.status = Status::infeasible;
      return res;
    }
    pivot_out_artificials();
    for (int j = art0_; j < ncols_; ++j) {
      lo_[j] = 0.0;
      hi_[j] = 0.0;
      if (state_[j] != kBasic) {
        state_[j] = kAtLower;
        xval_[j] = 0.0;
      }
    }
    // Phase 2: original costs.
    set_phase_costs(false);
    Status s2 = iterate(false);
    res.iterations = iters_;
    if (s2 != Status::optimal) {
      res.status = s2;
      return res;
    }
    refresh_basics();
    extract(res);
    res.status = Status::optimal;
    return res;
  }

 private:
  static constexpr int kBasic = -1;
  static constexpr int kAtLower = 0;
  static constexpr int kAtUpper = 1;

  const Problem& p_;
  Tolerances tol_;
  int n_ = 0, m_ = 0, nslack_ = 0, nart_ = 0, ncols_ = 0, rhs_col_ = 0;
  int slack0_ = 0, art0_ = 0;
  std::vector<double> tab_;   // m x (ncols+1), row-major
  std::vector<double> zrow_;  // reduced costs, ncols entries
  std::vector<double> cost_;  // phase costs per column
  std::vector<double> lo_, hi_;
  std::vector<double> xval_;  // values of nonbasic columns
  std::vector<double> beta_;  // values of basic columns, per row
  std::vector<int> basis_;    // column basic in each row
  std::vector<int> state_;    // per column: kBasic / kAtLower / kAtUpper
  std::vector<double> rowfactor_; // scaled row = rowfactor * original row
  long iters_ = 0;
  long iter_limit_ = 0;
  int degen_streak_ = 0;
  bool bland_ = false;
  double rhs_scale_ = 1.0;

  double& t(int i, int j) { return tab_[static_cast<size_t>(i) * (ncols_ + 1) + j]; }
  double t(int i, int j) const { return tab_[static_cast<size_t>(i) * (ncols_ + 1) + j]; }

  double phase1_tol() const { return tol_.feas * 100.0 * rhs_scale_; }

  double value_of_nonbasic(int j) const {
    if (state_[j] == kAtLower) return std::isfinite(lo_[j]) ? lo_[j] : 0.0;
    if (state_[j] == kAtUpper) return std::isfinite(hi_[j]) ? hi_[j] : 0.0;
    return xval_[j];
  }

  void build() {
    slack0_ = n_;
    art0_ = n_ + nslack_;
    tab_.assign(static_cast<size_t>(m_) * (ncols_ + 1), 0.0);
    lo_.resize(ncols_);
    hi_.resize(ncols_);
    xval_.assign(ncols_, 0.0);
    state_.assign(ncols_, kAtLower);
    basis_.assign(m_, -1);
    beta_.assign(m_, 0.0);
    rowfactor_.assign(m_, 1.0);
    cost_.assign(ncols_, 0.0);
    zrow_.assign(ncols_, 0.0);
    iter_limit_ = 50000 + 200L * (m_ + n_);

    for (int j = 0; j < n_; ++j) {
      lo_[j] = p_.lo()[j];
      hi_[j] = p_.hi()[j];
    }
    for (int i = 0; i < m_; ++i) {
      const auto& row = p_.rows()[i];
      // Row equilibration keeps wildly scaled constraints workable.
      double maxabs = 0.0;
      for (auto [v, a] : row.coef) maxabs = std::max(maxabs, std::abs(a));
      double s = (maxabs > 0.0 && std::isfinite(maxabs)) ? 1.0 / maxabs : 1.0;
      rowfactor_[i] = s;
      for (auto [v, a] : row.coef) t(i, v) += s * a;
      int sj = slack0_ + i;
      t(i, sj) = 1.0;
      switch (row.sense) {
        case Sense::le: lo_[sj] = 0.0; hi_[sj] = kInf; break;
        case Sense::ge: lo_[sj] = -kInf; hi_[sj] = 0.0; break;
        case Sense::eq: lo_[sj] = 0.0; hi_[sj] = 0.0; break;
      }
      t(i, rhs_col_) = s * row.rhs;
      rhs_scale_ = std::max(rhs_scale_, std::abs(s * row.rhs));
    }
    // Nonbasic columns rest at a finite bound (or 0 when free).
    for (int j = 0; j < art0_; ++j) {
      if (std::isfinite(lo_[j])) {
        state_[j] = kAtLower;
        xval_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        state_[j] = kAtUpper;
        xval_[j] = hi_[j];
      } else {
        state_[j] = kAtLower; // free, parked at 0
        xval_[j] = 0.0;
      }
    }
    // Crash basis: a slack whose bounds cover the row residual starts basic;
    // artificials only where that fails. All artificial columns exist either
    // way (pinned at zero) because they double as dual probes.
    for (int i = 0; i < m_; ++i) {
      const auto& row = p_.rows()[i];
      int sj = slack0_ + i;
      int aj = art0_ + i;
      double r = t(i, rhs_col_);
      for (int j = 0; j < n_; ++j) {
        double a = t(i, j);
        if (a != 0.0) r -= a * value_of_nonbasic(j);
      }
      bool slack_covers = (row.sense == Sense::le && r >= 0.0) ||
                          (row.sense == Sense::ge && r <= 0.0);
      if (slack_covers) {
        basis_[i] = sj;
        state_[sj] = kBasic;
        beta_[i] = r;
        t(i, aj) = 1.0;
        lo_[aj] = 0.0;
        hi_[aj] = 0.0; // never enters; dual probe only
        state_[aj] = kAtLower;
        continue;
      }
      if (r < 0.0) {
        // Flip the row so the artificial sits at +1 with a nonnegative value.
        for (int j = 0; j <= ncols_; ++j) t(i, j) = -t(i, j);
        rowfactor_[i] = -rowfactor_[i];
        r = -r;
      }
      t(i, aj) = 1.0;
      lo_[aj] = 0.0;
      hi_[aj] = kInf;
      basis_[i] = aj;
      state_[aj] = kBasic;
      beta_[i] = r;
    }
  }

  void set_phase_costs(bool phase1) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    if (phase1) {
      for (int i = 0; i < m_; ++i) cost_[art0_ + i] = 1.0;
    } else {
      for (int j = 0; j < n_; ++j) cost_[j] = p_.obj()[j];
    }
    recompute_zrow();
    degen_streak_ = 0;
    bland_ = false;
  }

  void recompute_zrow() {
    for (int j = 0; j < ncols_; ++j) zrow_[j] = cost_[j];
    for (int i = 0; i < m_; ++i) {
      double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      for (int j = 0; j < ncols_; ++j) zrow_[j] -= cb * t(i, j);
    }
    for (int i = 0; i < m_; ++i) zrow_[basis_[i]] = 0.0;
  }

  // Recompute basic values from B^-1 b minus nonbasic contributions.
  void refresh_basics() {
    for (int i = 0; i < m_; ++i) {
      double v = t(i, rhs_col_);
      for (int j = 0; j < ncols_; ++j) {
        if (state_[j] == kBasic) continue;
        double a = t(i, j);
        if (a == 0.0) continue;
        double xv = value_of_nonbasic(j);
        if (xv != 0.0) v -= a * xv;
      }
      beta_[i] = v;
    }
  }

  int price() const {
    int best = -1;
    double best_score = bland_ ? 0.0 : tol_.opt;
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] == kBasic) continue;
      if (hi_[j] - lo_[j] < tol_.pivot) continue; // fixed, never enters
      double rc = zrow_[j];
      bool eligible = false;
      if (state_[j] == kAtLower && rc < -tol_.opt) eligible = true;
      if (state_[j] == kAtUpper && rc > tol_.opt) eligible = true;
      if (!std::isfinite(lo_[j]) && !std::isfinite(hi_[j]) && std::abs(rc) > tol_.opt)
        eligible = true;
      if (!eligible) continue;
      if (bland_) return j;
      double score = std::abs(rc);
      if (score > best_score + 1e-15) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  Status iterate(bool phase1) {
    int refresh_countdown = 256;
    while (true) {
      if (++iters_ > iter_limit_) return Status::iteration_limit;
      if (--refresh_countdown <= 0) {
        refresh_basics();
        recompute_zrow();
        refresh_countdown = 256;
      }
      int j = price();
      if (j < 0) return Status::optimal;
      double rc = zrow_[j];
      bool is_free = !std::isfinite(lo_[j]) && !std::isfinite(hi_[j]);
      double sigma;
      if (is_free) sigma = (rc < 0.0) ? 1.0 : -1.0;
      else if (state_[j] == kAtLower) sigma = 1.0;
      else sigma = -1.0;

      double t_own = hi_[j] - lo_[j]; // may be inf
      // Pass 1: smallest step over all blocking rows.
      double row_min = kInf;
      for (int i = 0; i < m_; ++i) {
        double d = sigma * t(i, j);
        if (std::abs(d) <= tol_.pivot) continue;
        int k = basis_[i];
        double lim;
        if (d > 0.0) {
          if (!std::isfinite(lo_[k])) continue;
          lim = (beta_[i] - lo_[k]) / d;
        } else {
          if (!std::isfinite(hi_[k])) continue;
          lim = (hi_[k] - beta_[i]) / (-d);
        }
        if (lim < 0.0) lim = 0.0;
        if (lim < row_min) row_min = lim;
      }
      double t_best = std::min(t_own, row_min);
      if (!std::isfinite(t_best)) return Status::unbounded;

      // Pass 2: choose the leaving row among near-ties (largest pivot, or
      // lowest basis index under Bland's rule).
      int leave_row = -1;
      int leave_to = kAtLower;
      if (row_min <= t_own) {
        double tie = 1e-10 * (1.0 + row_min);
        double leave_abs = 0.0;
        for (int i = 0; i < m_; ++i) {
          double d = sigma * t(i, j);
          if (std::abs(d) <= tol_.pivot) continue;
          int k = basis_[i];
          double lim;
          int to;
          if (d > 0.0) {
            if (!std::isfinite(lo_[k])) continue;
            lim = (beta_[i] - lo_[k]) / d;
            to = kAtLower;
          } else {
            if (!std::isfinite(hi_[k])) continue;
            lim = (hi_[k] - beta_[i]) / (-d);
            to = kAtUpper;
          }
          if (lim < 0.0) lim = 0.0;
          if (lim > row_min + tie) continue;
          bool better;
          if (leave_row < 0) better = true;
          else if (bland_) better = basis_[i] < basis_[leave_row];
          else better = std::abs(t(i, j)) > leave_abs * 1.000001;
          if (better) {
            leave_row = i;
            leave_abs = std::abs(t(i, j));
            leave_to = to;
          }
        }
        t_best = row_min;
      }

      if (t_best <= 1e-11)
        ++degen_streak_;
      else
        degen_streak_ = 0;
      if (degen_streak_ > 60) bland_ = true;
      if (degen_streak_ > 40000) return Status::iteration_limit;

      // Step all basic values.
      if (t_best != 0.0)
        for (int i = 0; i < m_; ++i) beta_[i] -= sigma * t_best * t(i, j);

      if (leave_row < 0) {
        // Bound flip.
        state_[j] = (state_[j] == kAtLower) ? kAtUpper : kAtLower;
        xval_[j] = (state_[j] == kAtLower) ? lo_[j] : hi_[j];
        continue;
      }

      int k = basis_[leave_row];
      double enter_val = value_of_nonbasic(j) + sigma * t_best;
      state_[k] = leave_to;
      xval_[k] = (leave_to == kAtLower) ? lo_[k] : hi_[k];
      basis_[leave_row] = j;
      state_[j] = kBasic;
      beta_[leave_row] = enter_val;

      // Eliminate column j from the other rows and the cost row.
      double piv = t(leave_row, j);
      double inv = 1.0 / piv;
      double* prow = &tab_[static_cast<size_t>(leave_row) * (ncols_ + 1)];
      for (int q = 0; q <= ncols_; ++q) prow[q] *= inv;
      prow[j] = 1.0;
      for (int i = 0; i < m_; ++i) {
        if (i == leave_row) continue;
        double f = t(i, j);
        if (f == 0.0) continue;
        double* irow = &tab_[static_cast<size_t>(i) * (ncols_ + 1)];
        for (int q = 0; q <= ncols_; ++q) irow[q] -= f * prow[q];
        irow[j] = 0.0;
      }
      double fz = zrow_[j];
      if (fz != 0.0) {
        for (int q = 0; q < ncols_; ++q) zrow_[q] -= fz * prow[q];
        zrow_[j] = 0.0;
      }
      (void)phase1;
    }
  }

  void pivot_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < art0_) continue;
      int pick = -1;
      double best = tol_.pivot * 10.0;
      for (int j = 0; j < art0_; ++j) {
        if (state_[j] == kBasic) continue;
        double a = std::abs(t(i, j));
        if (a > best) {
          best = a;
          pick = j;
        }
      }
      if (pick < 0) continue; // redundant row; artificial stays pinned at 0
      int k = basis_[i];
      double enter_val = value_of_nonbasic(pick);
      state_[k] = kAtLower;
      xval_[k] = 0.0;
      basis_[i] = pick;
      state_[pick] = kBasic;
      double piv = t(i, pick);
      double inv = 1.0 / piv;
      double* prow = &tab_[static_cast<size_t>(i) * (ncols_ + 1)];
      for (int q = 0; q <= ncols_; ++q) prow[q] *= inv;
      prow[pick] = 1.0;
      for (int r = 0; r < m_; ++r) {
        if (r == i) continue;
        double f = t(r, pick);
        if (f == 0.0) continue;
        double* rrow = &tab_[static_cast<size_t>(r) * (ncols_ + 1)];
        for (int q = 0; q <= ncols_; ++q) rrow[q] -= f * prow[q];
        rrow[pick] = 0.0;
      }
      beta_[i] = enter_val; // was a degenerate swap; value carries over
      refresh_basics();
    }
  }

  void extract(Result& res) {
    res.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j)
      if (state_[j] != kBasic) res.x[j] = value_of_nonbasic(j);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) res.x[basis_[i]] = beta_[i];
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += p_.obj()[j] * res.x[j];
    res.objective = obj;
    // Duals from the artificial probe columns (each holds B^-1 e_i of the
    // scaled system); the row factor maps them back to the original rows.
    res.row_dual.assign(m_, 0.0);
    recompute_zrow();
    for (int i = 0; i < m_; ++i) {
      double rc = zrow_[art0_ + i];
      res.row_dual[i] = rc * rowfactor_[i];
    }
    res.reduced_cost.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) res.reduced_cost[j] = zrow_[j];
  }
};

} // namespace detail

inline Result solve(const Problem& p, Tolerances tol = {}) {
  if (p.num_vars() == 0) {
    Result r;
    r.status = p.num_rows() == 0 ? Status::optimal : Status::infeasible;
    return r;
  }
  detail::Simplex s(p, tol);
  return s.run();
}

} // namespace tdm::lp
