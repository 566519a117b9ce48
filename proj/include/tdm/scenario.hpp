#pragma once

// Demand patterns over time, discrete disruption-duration distributions, and
// the cost/time parameter set consumed by the optimization models and the
// evaluator. All value types; all functions pure.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tdm/error.hpp"
#include "tdm/network.hpp"

namespace tdm {

enum class DemandShape { uniform, increasing, decreasing, concave, convex };

inline const char* to_string(DemandShape s) {
  switch (s) {
    case DemandShape::uniform: return "uniform";
    case DemandShape::increasing: return "increasing";
    case DemandShape::decreasing: return "decreasing";
    case DemandShape::concave: return "concave";
    case DemandShape::convex: return "convex";
  }
  return "?";
}

struct DemandPattern {
  DemandShape shape = DemandShape::uniform;
  double q_min = 0.0;       // passengers / minute
  double q_max = 0.0;       // passengers / minute
  double initial_queue = 0; // Q^0, mass already waiting at t = 0
};

// Density q(t) on [0, horizon]. The concave/convex shapes are the parabola
// with peak (resp. trough) at horizon/2 and the opposite extreme at the ends;
// increasing/decreasing are linear ramps between q_min and q_max.
inline double demand_density(const DemandPattern& p, double t, double horizon) {
  if (horizon <= 0.0) fail_schema("demand horizon must be positive");
  if (t < 0.0) t = 0.0;
  if (t > horizon) t = horizon;
  double d = p.q_max - p.q_min;
  switch (p.shape) {
    case DemandShape::uniform: return 0.5 * (p.q_min + p.q_max);
    case DemandShape::increasing: return p.q_min + d * t / horizon;
    case DemandShape::decreasing: return p.q_max - d * t / horizon;
    case DemandShape::concave:
      return -(4.0 / (horizon * horizon)) * d * t * t + (4.0 / horizon) * d * t + p.q_min;
    case DemandShape::convex:
      return (4.0 / (horizon * horizon)) * d * t * t - (4.0 / horizon) * d * t + p.q_max;
  }
  return 0.0;
}

// Exact integral of the polynomial density over [t1, t2]; the initial queue
// mass counts only when the window starts at 0.
inline double integrate_demand(const DemandPattern& p, double t1, double t2,
                               double horizon, bool include_initial_queue = true) {
  if (t1 > t2) fail_schema("integrate_demand: t1 > t2");
  if (t1 < 0.0 || t2 > horizon + 1e-9)
    fail_schema("integrate_demand: window outside [0, horizon]");
  double d = p.q_max - p.q_min;
  auto antiderivative = [&](double t) {
    switch (p.shape) {
      case DemandShape::uniform: return 0.5 * (p.q_min + p.q_max) * t;
      case DemandShape::increasing: return p.q_min * t + 0.5 * d * t * t / horizon;
      case DemandShape::decreasing: return p.q_max * t - 0.5 * d * t * t / horizon;
      case DemandShape::concave:
        return -(4.0 / (3.0 * horizon * horizon)) * d * t * t * t +
               (2.0 / horizon) * d * t * t + p.q_min * t;
      case DemandShape::convex:
        return (4.0 / (3.0 * horizon * horizon)) * d * t * t * t -
               (2.0 / horizon) * d * t * t + p.q_max * t;
    }
    return 0.0;
  };
  double q = antiderivative(t2) - antiderivative(t1);
  if (include_initial_queue && t1 == 0.0) q += p.initial_queue;
  return q;
}

enum class DurationKind {
  dirac0,
  diracTbar,
  biDirac,
  uniform,
  normal_like,
  exponential_like,
  custom
};

inline const char* to_string(DurationKind k) {
  switch (k) {
    case DurationKind::dirac0: return "dirac0";
    case DurationKind::diracTbar: return "diracTbar";
    case DurationKind::biDirac: return "biDirac";
    case DurationKind::uniform: return "uniform";
    case DurationKind::normal_like: return "normal-like";
    case DurationKind::exponential_like: return "exponential-like";
    case DurationKind::custom: return "custom";
  }
  return "?";
}

struct DurationDistribution {
  DurationKind kind = DurationKind::uniform;
  std::vector<double> support; // multiples of the time interval, up to T-bar
  std::vector<double> pmf;     // same length, sums to 1

  double mean() const {
    double m = 0.0;
    for (size_t i = 0; i < support.size(); ++i) m += support[i] * pmf[i];
    return m;
  }
  // Mass at or past z; with strict=true only outages that outlive z count
  // (an outage ending exactly at z is over and observable by then).
  double tail_probability(double z, bool strict = false) const {
    double p = 0.0;
    for (size_t i = 0; i < support.size(); ++i) {
      bool in = strict ? support[i] > z + 1e-9 : support[i] >= z - 1e-9;
      if (in) p += pmf[i];
    }
    return p;
  }
  double max_support() const {
    double m = 0.0;
    for (size_t i = 0; i < support.size(); ++i)
      if (pmf[i] > 0.0) m = std::max(m, support[i]);
    return m;
  }
  void validate() const {
    if (support.size() != pmf.size()) fail_schema("duration pmf/support size mismatch");
    double sum = 0.0;
    for (double g : pmf) {
      if (g < 0.0) fail_schema("duration pmf has a negative mass");
      sum += g;
    }
    if (std::abs(sum - 1.0) > 1e-12) fail_schema("duration pmf must sum to 1");
  }
};

struct DurationParams {
  double normal_mean = -1.0; // defaults below when unset
  double normal_sd = -1.0;
  double exponential_mean = -1.0;
  std::vector<std::pair<double, double>> custom_pmf; // (duration, mass)
};

// Discrete pmf on {interval, 2*interval, ..., t_bar}. "dirac0" still lasts one
// interval, so its atom sits at the first support point. The normal-like and
// exponential-like shapes default to mean t_bar/2 (sd t_bar/6) and a truncated
// geometric whose untruncated mean is t_bar/4.
inline DurationDistribution build_distribution(DurationKind kind, double t_bar,
                                               double interval,
                                               const DurationParams& params = {}) {
  if (interval <= 0.0 || t_bar <= 0.0) fail_schema("duration grid must be positive");
  int n = static_cast<int>(std::llround(t_bar / interval));
  if (std::abs(n * interval - t_bar) > 1e-9)
    fail_schema("time interval must divide the horizon");
  DurationDistribution d;
  d.kind = kind;
  for (int i = 1; i <= n; ++i) d.support.push_back(i * interval);
  d.pmf.assign(n, 0.0);
  switch (kind) {
    case DurationKind::dirac0: d.pmf[0] = 1.0; break;
    case DurationKind::diracTbar: d.pmf[n - 1] = 1.0; break;
    case DurationKind::biDirac:
      if (n < 2) fail_schema("biDirac needs at least two support points");
      d.pmf[0] = 0.5;
      d.pmf[n - 1] = 0.5;
      break;
    case DurationKind::uniform:
      for (auto& g : d.pmf) g = 1.0 / n;
      break;
    case DurationKind::normal_like: {
      double mu = params.normal_mean > 0 ? params.normal_mean : t_bar / 2.0;
      double sd = params.normal_sd > 0 ? params.normal_sd : t_bar / 6.0;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        double zsc = (d.support[i] - mu) / sd;
        d.pmf[i] = std::exp(-0.5 * zsc * zsc);
        sum += d.pmf[i];
      }
      for (auto& g : d.pmf) g /= sum;
      break;
    }
    case DurationKind::exponential_like: {
      double mean = params.exponential_mean > 0 ? params.exponential_mean : t_bar / 4.0;
      double rho = interval / mean; // geometric success probability, mean = 1/rho steps
      if (rho >= 1.0) rho = 1.0 - 1e-9;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        d.pmf[i] = std::pow(1.0 - rho, i) * rho;
        sum += d.pmf[i];
      }
      for (auto& g : d.pmf) g /= sum;
      break;
    }
    case DurationKind::custom: {
      if (params.custom_pmf.empty()) fail_schema("custom duration needs a pmf");
      double sum = 0.0;
      for (auto [t, g] : params.custom_pmf) {
        int idx = static_cast<int>(std::llround(t / interval)) - 1;
        if (idx < 0 || idx >= n || std::abs((idx + 1) * interval - t) > 1e-9)
          fail_schema("custom pmf point off the duration grid");
        if (g < 0.0) fail_schema("custom pmf mass must be nonnegative");
        d.pmf[idx] += g;
        sum += g;
      }
      if (sum <= 0.0) fail_schema("custom pmf has no mass");
      for (auto& g : d.pmf) g /= sum;
      break;
    }
  }
  d.validate();
  return d;
}

// E[T | T >= z] (strict=true gives E[T | T > z]).
inline double conditional_mean_duration(const DurationDistribution& d, double z,
                                        bool strict = false) {
  double mass = 0.0, acc = 0.0;
  for (size_t i = 0; i < d.support.size(); ++i) {
    bool in = strict ? d.support[i] > z + 1e-9 : d.support[i] >= z - 1e-9;
    if (in) {
      mass += d.pmf[i];
      acc += d.support[i] * d.pmf[i];
    }
  }
  if (mass <= 1e-15) fail_infeasible("initiation beyond duration support");
  return acc / mass;
}

// Relocation arc pricing inputs. Presets give the four flat class totals;
// the component form prices an arc as c0 + cbar + gammaD * tD.
struct CostClassComponents {
  double c0 = 0.0;     // flat change penalty
  double cbar = 0.0;   // vehicle and crew cost
  double gammaD = 0.0; // user cost per diverted vehicle-minute
  double tD = 0.0;     // diversion travel time, minutes
  double total() const { return c0 + cbar + gammaD * tD; }
};

struct CostParams {
  double alpha = 1.0; // operator cost weight
  double beta = 0.1;  // value of time, $ per minute
  double gamma = 1.0; // wait penalty multiplier
  bool use_components = false;
  // preset totals
  double bus_line_transfer = 100.0;   // BLT
  double bus_backup_transfer = 300.0; // BBT
  double metro_line_transfer = 200.0; // MLT
  double metro_short_turn = 0.0;      // MST
  // component form, keyed by the same four classes
  std::map<std::string, CostClassComponents> components;
};

struct TimeParams {
  double horizon = 240.0;      // T-bar, minutes
  double interval = 10.0;      // demand/duration grid
  double itm_interval = 10.0;  // initiation-time step
  double sim_interval = 10.0;  // evaluator step
  double deterministic_T = -1; // fixed duration mode when positive
};

struct SolverParams {
  double epsilon = 0.01;
  double gap_tol = 1e-4;
  double time_limit_s = 300.0;
  long max_nodes = -1;
  int k_paths = 6;
  unsigned seed = 0;
};

struct Scenario {
  NetworkSpec network;
  std::vector<std::pair<std::string, std::string>> od_list;
  std::vector<DemandPattern> od_demand; // parallel to od_list
  NetworkSpec emergency;
  std::vector<BrokenLink> broken;
  DurationKind duration_kind = DurationKind::uniform;
  DurationParams duration_params;
  CostParams costs;
  TimeParams time;
  SolverParams solver;

  DurationDistribution duration() const {
    return build_distribution(duration_kind, time.horizon, time.interval,
                              duration_params);
  }
  // Fixed duration used by the deterministic-duration models: the declared
  // deterministic_T when present, otherwise the distribution mean.
  double effective_T() const {
    if (time.deterministic_T > 0.0) return time.deterministic_T;
    return duration().mean();
  }
  void validate() const {
    if (od_list.size() != od_demand.size())
      fail_schema("per-OD demand list must match the OD list");
    if (costs.alpha <= 0 || costs.beta <= 0 || costs.gamma <= 0)
      fail_schema("alpha, beta, gamma must be positive");
    if (solver.epsilon <= 0) fail_schema("epsilon must be positive");
    auto divides = [&](double step) {
      double r = time.horizon / step;
      return std::abs(r - std::llround(r)) < 1e-9;
    };
    if (!divides(time.interval) || !divides(time.itm_interval) ||
        !divides(time.sim_interval))
      fail_schema("interval, itm_interval and sim_interval must divide the horizon");
    for (const auto& d : od_demand) {
      if (d.q_min < 0 || d.q_max < d.q_min)
        fail_schema("demand needs 0 <= q_min <= q_max");
      if (d.initial_queue < 0) fail_schema("initial queue must be nonnegative");
    }
  }
};

} // namespace tdm
