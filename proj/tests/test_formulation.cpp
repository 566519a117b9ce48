#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "tdm/formulation.hpp"
#include "tdm/itm.hpp"
#include "tdm/solver.hpp"

using namespace tdm;

namespace {

int yvar_of(const QcqpInstance& ins, int line) {
  for (const auto& lv : ins.line_vars)
    if (lv.line == line) return lv.y_var;
  return -1;
}

} // namespace

TEST_SUITE("formulation") {

TEST_CASE("relocation cost classes") {
  auto net = fixtures::reference_disrupted_network();
  CostParams costs; // preset defaults: BLT 100, BBT 300, MLT 200, MST 0
  const Line& l1 = net.lines[net.line_index("L1")];
  const Line& l2 = net.lines[net.line_index("L2")];
  const Line& l5 = net.lines[net.line_index("L5")];
  const Line& l7 = net.lines[net.line_index("L7")];
  const Line& l8 = net.lines[net.line_index("L8")];
  const Line& l3 = net.lines[net.line_index("L3")];
  const Line& dep = net.lines[net.line_index("DEP_BUS")];
  CHECK(relocation_cost(l1, l5, costs) == doctest::Approx(0.0));    // own short-turn
  CHECK(relocation_cost(l2, l5, costs) == doctest::Approx(200.0));  // foreign short-turn
  CHECK(relocation_cost(l1, l7, costs) == doctest::Approx(200.0));  // detour is a transfer
  CHECK(relocation_cost(dep, l8, costs) == doctest::Approx(300.0)); // backup transfer
  CHECK(relocation_cost(l3, l8, costs) == doctest::Approx(100.0));  // bus line transfer
  CHECK_THROWS_AS(relocation_cost(l1, l8, costs), Error);           // cross-mode

  CostParams comp;
  comp.use_components = true;
  comp.components["line_transfer"] = {0.0, 0.0, 2.0, 7.0};
  CHECK(relocation_cost(l1, l2, comp) == doctest::Approx(14.0));
}

TEST_CASE("capacity coefficient matches K*T/R") {
  auto built = fixtures::build(fixtures::reference_scenario_deterministic());
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  // Find a capacity row on a metro segment of L1 (K=800, T=60, R=36).
  int l1 = built.disrupted.line_index("L1");
  const QcqpRow* row = nullptr;
  for (const auto& r : ins.rows) {
    if (r.tag != RowTag::capacity) continue;
    if (built.disrupted.segments[r.entity].line == l1) {
      row = &r;
      break;
    }
  }
  REQUIRE(row != nullptr);
  // Scaled form: sum f*Q*p - y <= 0 with f = R/(K*T); the unscaled capacity
  // coefficient K*T/R is the reciprocal.
  CHECK(1.0 / row->dual_scale == doctest::Approx(800.0 * 60.0 / 36.0)); // 1333.33
  double ycoef = 0.0;
  for (auto [j, a] : row->coef)
    if (j == yvar_of(ins, l1)) ycoef = a;
  CHECK(ycoef == doctest::Approx(-1.0));
}

TEST_CASE("reference instance passes the audit and the status-quo probe") {
  auto built = fixtures::build(fixtures::reference_scenario_deterministic());
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  CHECK(ins.self_audit().empty());
  CHECK(ins.status_quo_capacity_ok);
  CHECK(ins.beta == doctest::Approx(0.1));
  int n_paths = 0;
  for (const auto& ph : built.disrupted.paths) n_paths += ph.size();
  CHECK(static_cast<int>(ins.path_vars.size()) == n_paths);
  CHECK(!ins.couplings.empty());
  std::ostringstream dump;
  ins.debug_dump(dump);
  CHECK(dump.str().find("capacity[") != std::string::npos);
  CHECK(dump.str().find("fleet-balance[L1]") != std::string::npos);
}

TEST_CASE("demand weights follow the duration window") {
  auto s = fixtures::mini_scenario();
  auto built = fixtures::build(s);
  auto ins30 = build_bm(built.disrupted, built.scenario, 30.0);
  auto ins60 = build_bm(built.disrupted, built.scenario, 60.0);
  // Uniform demand on OD A->C: the linear coefficient of a path var is
  // Q * runtime; halving T halves Q.
  const auto& pv = ins30.path_vars.front();
  CHECK(ins30.obj[pv.var] * 2.0 == doctest::Approx(ins60.obj[pv.var]));
}

TEST_CASE("restrict: LLA pins bridging and foreign arcs at zero") {
  auto built = fixtures::build(fixtures::reference_scenario_deterministic());
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  auto lla = restrict(ins, StrategyFamily::LLA, built.disrupted);
  int l1 = built.disrupted.line_index("L1");
  int l5 = built.disrupted.line_index("L5");
  int l6 = built.disrupted.line_index("L6");
  int l7 = built.disrupted.line_index("L7");
  int l8 = built.disrupted.line_index("L8");
  for (const auto& av : lla.arc_vars) {
    bool own_short_turn = av.from_line == l1 && (av.to_line == l5 || av.to_line == l6);
    if (own_short_turn) {
      CHECK(lla.vars[av.var].hi > 0.0);
    } else {
      CHECK(lla.vars[av.var].fixed_zero());
    }
  }
  // Unfed emergency lines are pinned along with their dependent path shares.
  CHECK(lla.vars[yvar_of(lla, l7)].fixed_zero());
  CHECK(lla.vars[yvar_of(lla, l8)].fixed_zero());
  for (const auto& pv : lla.path_vars) {
    const Path& path = built.disrupted.paths[pv.od][pv.path];
    bool uses_dead = built.disrupted.path_uses_line(path, l7) ||
                     built.disrupted.path_uses_line(path, l8);
    if (uses_dead) CHECK(lla.vars[pv.var].fixed_zero());
  }
  // Objective coefficients are untouched.
  for (int j = 0; j < ins.num_vars(); ++j) CHECK(lla.obj[j] == ins.obj[j]);

  auto bb = restrict(ins, StrategyFamily::BB, built.disrupted);
  CHECK(!bb.vars[yvar_of(bb, l8)].fixed_zero()); // bridge is fed under BB
  CHECK(bb.vars[yvar_of(bb, l7)].fixed_zero());  // detour still is not

  auto bm = restrict(ins, StrategyFamily::BM, built.disrupted);
  for (int j = 0; j < ins.num_vars(); ++j) {
    CHECK(bm.vars[j].lo == ins.vars[j].lo);
    CHECK(bm.vars[j].hi == ins.vars[j].hi);
  }
}

TEST_CASE("beta normalization: dollars = beta * normalized objective") {
  auto s = fixtures::mini_scenario();
  auto built = fixtures::build(s);
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  SolverConfig cfg;
  cfg.gap_tol = 1e-5;
  cfg.time_limit_s = 20;
  auto sol = solve(ins, cfg);
  REQUIRE(sol.has_incumbent());
  double total = ins.total_cost_dollars(sol.x);
  double user = ins.user_cost_dollars(sol.x);
  double oper = ins.operator_cost_dollars(sol.x);
  CHECK(total == doctest::Approx(user + oper));
  CHECK(total == doctest::Approx(ins.beta * sol.upper_bound));
  // Operator dollars are 2 * alpha * sum(c x) * tail.
  CHECK(oper == doctest::Approx(2.0 * ins.alpha * ins.relocation_cost_raw(sol.x) *
                                ins.tail_probability));
}

TEST_CASE("relocation strictly costly: huge alpha drives x to zero") {
  // Undisrupted network (no emergency lines, no epsilon forcing).
  auto s = fixtures::mini_scenario();
  s.broken.clear();
  s.emergency = NetworkSpec{};
  s.costs.alpha = 1e5;
  auto built = fixtures::build(s);
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  SolverConfig cfg;
  cfg.gap_tol = 1e-6;
  cfg.time_limit_s = 20;
  auto sol = solve(ins, cfg);
  REQUIRE(sol.has_incumbent());
  for (const auto& av : ins.arc_vars) CHECK(sol.x[av.var] <= 1e-7);
  for (const auto& lv : ins.line_vars)
    CHECK(sol.x[lv.y_var] == doctest::Approx(lv.y0).epsilon(1e-6));
}

TEST_CASE("fixed-initiation subproblem structurally equals the deterministic model "
          "when all mass sits at the horizon") {
  auto s = fixtures::mini_scenario(DurationKind::diracTbar, -1.0);
  auto built = fixtures::build(s);
  auto refs =
      compute_reference_assignments(built.normal, built.disrupted, built.scenario);
  auto p3 = build_itm_subproblem(built.disrupted, built.scenario, 0.0, refs);
  auto bm = build_bm(built.disrupted, built.scenario, 60.0, &refs);
  REQUIRE(p3.num_vars() == bm.num_vars());
  for (int j = 0; j < p3.num_vars(); ++j) {
    CHECK(p3.obj[j] == doctest::Approx(bm.obj[j]).epsilon(1e-12));
    CHECK(p3.vars[j].lo == bm.vars[j].lo);
    CHECK(p3.vars[j].hi == bm.vars[j].hi);
  }
  REQUIRE(p3.bilinear.size() == bm.bilinear.size());
  for (size_t t = 0; t < p3.bilinear.size(); ++t) {
    CHECK(p3.bilinear[t].coef == doctest::Approx(bm.bilinear[t].coef));
    CHECK(p3.bilinear[t].p == bm.bilinear[t].p);
    CHECK(p3.bilinear[t].u == bm.bilinear[t].u);
  }
  REQUIRE(p3.rows.size() == bm.rows.size());
  for (size_t r = 0; r < p3.rows.size(); ++r) {
    REQUIRE(p3.rows[r].coef.size() == bm.rows[r].coef.size());
    for (size_t c = 0; c < p3.rows[r].coef.size(); ++c) {
      CHECK(p3.rows[r].coef[c].first == bm.rows[r].coef[c].first);
      CHECK(p3.rows[r].coef[c].second ==
            doctest::Approx(bm.rows[r].coef[c].second).epsilon(1e-12));
    }
    CHECK(p3.rows[r].rhs == doctest::Approx(bm.rows[r].rhs));
  }
  // Constant branches vanish: no pre-initiation window, no post-recovery slack.
  CHECK(p3.obj_constant == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(bm.obj_constant == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("uniform demand: zero-initiation subproblem matches the mean-duration model") {
  auto s = fixtures::mini_scenario(DurationKind::uniform, -1.0);
  auto built = fixtures::build(s);
  auto refs =
      compute_reference_assignments(built.normal, built.disrupted, built.scenario);
  double mean_T = built.scenario.duration().mean();
  auto p3 = build_itm_subproblem(built.disrupted, built.scenario, 0.0, refs);
  auto bm = build_bm(built.disrupted, built.scenario, mean_T, &refs);
  // With a flat demand rate the tail-integrated weights equal the
  // mean-duration weights exactly, so the decision parts coincide.
  REQUIRE(p3.num_vars() == bm.num_vars());
  for (int j = 0; j < p3.num_vars(); ++j)
    CHECK(p3.obj[j] == doctest::Approx(bm.obj[j]).epsilon(1e-9));
  REQUIRE(p3.bilinear.size() == bm.bilinear.size());
  for (size_t t = 0; t < p3.bilinear.size(); ++t)
    CHECK(p3.bilinear[t].coef == doctest::Approx(bm.bilinear[t].coef).epsilon(1e-9));
  // Totals agree within solver gaps once both are solved.
  SolverConfig cfg;
  cfg.gap_tol = 1e-4;
  cfg.time_limit_s = 20;
  auto sp3 = solve(p3, cfg);
  auto sbm = solve(bm, cfg);
  REQUIRE(sp3.has_incumbent());
  REQUIRE(sbm.has_incumbent());
  double vp3 = p3.total_cost_dollars(sp3.x);
  double vbm = bm.total_cost_dollars(sbm.x);
  double slack = (sp3.gap + sbm.gap + 1e-6) * std::max(vp3, vbm);
  CHECK(std::abs(vp3 - vbm) <= slack + 1e-6);
}

TEST_CASE("initiation at or past the whole support is rejected") {
  // An outage over by z triggers nothing, so a blink distribution leaves no
  // world to act in from its own atom onward.
  auto s = fixtures::mini_scenario(DurationKind::dirac0, -1.0);
  auto built = fixtures::build(s);
  auto refs =
      compute_reference_assignments(built.normal, built.disrupted, built.scenario);
  CHECK_THROWS_AS(build_itm_subproblem(built.disrupted, built.scenario, 10.0, refs),
                  Error);
}

TEST_CASE("waiting past the short atom halves the two-point relocation charge") {
  auto s = fixtures::mini_scenario(DurationKind::biDirac, -1.0);
  auto built = fixtures::build(s);
  auto refs =
      compute_reference_assignments(built.normal, built.disrupted, built.scenario);
  auto p0 = build_itm_subproblem(built.disrupted, built.scenario, 0.0, refs);
  auto p10 = build_itm_subproblem(built.disrupted, built.scenario, 10.0, refs);
  CHECK(p0.tail_probability == doctest::Approx(1.0));
  CHECK(p10.tail_probability == doctest::Approx(0.5));
  REQUIRE(!p0.arc_vars.empty());
  for (size_t a = 0; a < p0.arc_vars.size(); ++a)
    CHECK(p10.obj[p10.arc_vars[a].var] ==
          doctest::Approx(0.5 * p0.obj[p0.arc_vars[a].var]));
  // The conditional window after the short atom is the long outage.
  CHECK(p10.capacity_window == doctest::Approx(60.0 - 10.0));
}

TEST_CASE("family nesting: optimal totals order LLA >= BB >= BM") {
  auto s = fixtures::mini_scenario();
  auto built = fixtures::build(s);
  auto ins = build_bm(built.disrupted, built.scenario, 60.0);
  SolverConfig cfg;
  cfg.gap_tol = 1e-5;
  cfg.time_limit_s = 30;
  auto ins_lla = restrict(ins, StrategyFamily::LLA, built.disrupted);
  auto ins_bb = restrict(ins, StrategyFamily::BB, built.disrupted);
  auto ins_bm = restrict(ins, StrategyFamily::BM, built.disrupted);
  auto lla = solve(ins_lla, cfg);
  auto bb = solve(ins_bb, cfg);
  auto bm = solve(ins_bm, cfg);
  REQUIRE(lla.has_incumbent());
  REQUIRE(bb.has_incumbent());
  REQUIRE(bm.has_incumbent());
  // A wider family must fund the epsilon floor of every emergency line the
  // narrower family left pinned at zero, so the nesting holds up to that
  // forcing cost (vanishing with epsilon) plus the solver gaps.
  auto eps_allowance = [&](const QcqpInstance& narrow, const QcqpInstance& wide) {
    double allowance = 0.0;
    for (const auto& lv : wide.line_vars) {
      if (!narrow.vars[lv.y_var].fixed_zero() || wide.vars[lv.y_var].fixed_zero())
        continue;
      double cheapest = std::numeric_limits<double>::infinity();
      for (const auto& av : wide.arc_vars)
        if (av.to_line == lv.line && !wide.vars[av.var].fixed_zero())
          cheapest = std::min(cheapest, wide.obj[av.var]);
      if (std::isfinite(cheapest)) allowance += cheapest * wide.epsilon;
    }
    return allowance;
  };
  double gaps = (lla.gap + bb.gap + bm.gap + 1e-9) * lla.upper_bound + 1e-6;
  CHECK(lla.upper_bound >= bb.upper_bound - gaps - eps_allowance(ins_lla, ins_bb));
  CHECK(bb.upper_bound >= bm.upper_bound - gaps - eps_allowance(ins_bb, ins_bm));
}

} // TEST_SUITE
