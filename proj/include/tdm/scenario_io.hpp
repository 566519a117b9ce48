#pragma once

// Scenario file loading: one JSON document with network, odpairs, disruption,
// costs, time and solver sections. Schema violations carry a JSON-pointer
// anchor (parse errors carry the byte offset reported by the parser).

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tdm/error.hpp"
#include "tdm/network.hpp"
#include "tdm/scenario.hpp"

namespace tdm {

namespace detail_io {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  fail_schema(where + ": " + what);
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing key '") + key + "'");
  return *it;
}

inline double need_num(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) bad(where + "/" + key, "expected a number");
  return v.get<double>();
}

inline double opt_num(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<double>();
}

inline std::string need_str(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string()) bad(where + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline DemandShape parse_shape(const std::string& s, const std::string& where) {
  if (s == "uniform") return DemandShape::uniform;
  if (s == "increasing") return DemandShape::increasing;
  if (s == "decreasing") return DemandShape::decreasing;
  if (s == "concave") return DemandShape::concave;
  if (s == "convex") return DemandShape::convex;
  bad(where, "unknown demand shape '" + s + "'");
}

inline DurationKind parse_duration_kind(const std::string& s, const std::string& where) {
  if (s == "dirac0") return DurationKind::dirac0;
  if (s == "diracTbar") return DurationKind::diracTbar;
  if (s == "biDirac") return DurationKind::biDirac;
  if (s == "uniform") return DurationKind::uniform;
  if (s == "normal-like" || s == "normalLike") return DurationKind::normal_like;
  if (s == "exponential-like" || s == "exponentialLike")
    return DurationKind::exponential_like;
  if (s == "custom") return DurationKind::custom;
  bad(where, "unknown duration kind '" + s + "'");
}

inline LineSpec parse_line(const json& j, const std::string& where,
                           bool emergency_section) {
  LineSpec l;
  l.id = need_str(j, "id", where);
  l.mode = need_str(j, "mode", where);
  std::string kind = j.value("kind", emergency_section ? "emergency" : "regular");
  if (kind == "regular") l.kind = LineKind::regular;
  else if (kind == "emergency") l.kind = LineKind::emergency;
  else if (kind == "depot") l.kind = LineKind::depot;
  else bad(where, "unknown line kind '" + kind + "'");
  if (l.kind == LineKind::emergency) {
    std::string ek = j.value("emergency_kind", "bridging");
    if (ek == "short_turn") l.emergency_kind = EmergencyKind::short_turn;
    else if (ek == "detour") l.emergency_kind = EmergencyKind::detour;
    else if (ek == "bridging") l.emergency_kind = EmergencyKind::bridging;
    else bad(where, "unknown emergency_kind '" + ek + "'");
    l.parent = j.value("parent", "");
  }
  if (j.contains("stops")) {
    for (const auto& s : j.at("stops")) l.stops.push_back(s.get<std::string>());
  }
  l.round_trip_time = opt_num(j, "round_trip_time", 0.0);
  l.base_fleet = opt_num(j, "base_fleet", 0.0);
  l.max_fleet = opt_num(j, "max_fleet", l.base_fleet);
  l.vehicle_capacity = opt_num(j, "vehicle_capacity", 0.0);
  if (j.contains("run_time_overrides")) {
    for (const auto& ov : j.at("run_time_overrides")) {
      LineSpec::Override o;
      o.from = need_str(ov, "from", where + "/run_time_overrides");
      o.to = need_str(ov, "to", where + "/run_time_overrides");
      o.minutes = need_num(ov, "minutes", where + "/run_time_overrides");
      l.run_time_overrides.push_back(o);
    }
  }
  return l;
}

} // namespace detail_io

inline Scenario load_scenario_json(const nlohmann::json& doc) {
  using detail_io::bad;
  using detail_io::need;
  using detail_io::need_num;
  using detail_io::need_str;
  using detail_io::opt_num;
  Scenario s;

  const auto& net = need(doc, "network", "/");
  for (const auto& [mode, rt] : need(net, "modes", "/network").items()) {
    if (!rt.is_number()) bad("/network/modes/" + mode, "expected minutes");
    s.network.mode_default_run_time[mode] = rt.get<double>();
  }
  for (const auto& st : need(net, "stops", "/network")) {
    Stop stop;
    stop.id = need_str(st, "id", "/network/stops");
    stop.x = opt_num(st, "x", 0.0);
    stop.y = opt_num(st, "y", 0.0);
    s.network.stops.push_back(stop);
  }
  {
    size_t i = 0;
    for (const auto& lj : need(net, "lines", "/network"))
      s.network.lines.push_back(
          detail_io::parse_line(lj, "/network/lines/" + std::to_string(i++), false));
  }

  {
    size_t i = 0;
    for (const auto& oj : need(doc, "odpairs", "/")) {
      std::string where = "/odpairs/" + std::to_string(i++);
      s.od_list.push_back({need_str(oj, "origin", where),
                           need_str(oj, "destination", where)});
      DemandPattern d;
      d.shape = detail_io::parse_shape(oj.value("pattern", "uniform"), where);
      d.q_min = need_num(oj, "q_min", where);
      d.q_max = need_num(oj, "q_max", where);
      d.initial_queue = opt_num(oj, "initial_queue", 0.0);
      s.od_demand.push_back(d);
    }
  }

  if (doc.contains("disruption")) {
    const auto& dis = doc.at("disruption");
    if (dis.contains("broken_links")) {
      size_t i = 0;
      for (const auto& bj : dis.at("broken_links")) {
        std::string where = "/disruption/broken_links/" + std::to_string(i++);
        BrokenLink b;
        b.line = bj.value("line", "");
        b.from = need_str(bj, "from", where);
        b.to = need_str(bj, "to", where);
        b.bidirectional = bj.value("bidirectional", true);
        s.broken.push_back(b);
      }
    }
    if (dis.contains("emergency_lines")) {
      s.emergency.mode_default_run_time = s.network.mode_default_run_time;
      size_t i = 0;
      for (const auto& lj : dis.at("emergency_lines"))
        s.emergency.lines.push_back(detail_io::parse_line(
            lj, "/disruption/emergency_lines/" + std::to_string(i++), true));
    }
    if (dis.contains("duration")) {
      const auto& du = dis.at("duration");
      s.duration_kind =
          detail_io::parse_duration_kind(need_str(du, "kind", "/disruption/duration"),
                                         "/disruption/duration");
      s.duration_params.normal_mean = opt_num(du, "mean", -1.0);
      s.duration_params.normal_sd = opt_num(du, "sd", -1.0);
      s.duration_params.exponential_mean = opt_num(du, "mean", -1.0);
      if (du.contains("pmf"))
        for (const auto& point : du.at("pmf"))
          s.duration_params.custom_pmf.push_back(
              {point.at(0).get<double>(), point.at(1).get<double>()});
    }
  }

  if (doc.contains("costs")) {
    const auto& c = doc.at("costs");
    s.costs.alpha = opt_num(c, "alpha", 1.0);
    s.costs.beta = opt_num(c, "beta", 0.1);
    s.costs.gamma = opt_num(c, "gamma", 1.0);
    if (c.contains("presets")) {
      const auto& p = c.at("presets");
      s.costs.bus_line_transfer = opt_num(p, "BLT", s.costs.bus_line_transfer);
      s.costs.bus_backup_transfer = opt_num(p, "BBT", s.costs.bus_backup_transfer);
      s.costs.metro_line_transfer = opt_num(p, "MLT", s.costs.metro_line_transfer);
      s.costs.metro_short_turn = opt_num(p, "MST", s.costs.metro_short_turn);
    }
    if (c.contains("arc_components")) {
      s.costs.use_components = true;
      for (const auto& [cls, comp] : c.at("arc_components").items()) {
        CostClassComponents cc;
        cc.c0 = opt_num(comp, "c0", 0.0);
        cc.cbar = opt_num(comp, "cbar", 0.0);
        cc.gammaD = opt_num(comp, "gammaD", 0.0);
        cc.tD = opt_num(comp, "tD", 0.0);
        s.costs.components[cls] = cc;
      }
    }
  }

  if (doc.contains("time")) {
    const auto& t = doc.at("time");
    s.time.horizon = need_num(t, "horizon", "/time");
    s.time.interval = opt_num(t, "interval", 10.0);
    s.time.itm_interval = opt_num(t, "itm_interval", s.time.interval);
    s.time.sim_interval = opt_num(t, "sim_interval", s.time.interval);
    s.time.deterministic_T = opt_num(t, "deterministic_T", -1.0);
  }

  if (doc.contains("solver")) {
    const auto& sv = doc.at("solver");
    s.solver.epsilon = opt_num(sv, "epsilon", 0.01);
    s.solver.gap_tol = opt_num(sv, "gap_tol", 1e-4);
    s.solver.time_limit_s = opt_num(sv, "time_limit", 300.0);
    s.solver.k_paths = static_cast<int>(opt_num(sv, "k_paths", 6.0));
  }

  s.validate();
  return s;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_schema("cannot open scenario file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail_schema("parse error in '" + path + "': " + e.what());
  }
  return load_scenario_json(doc);
}

// 64-bit FNV-1a over the file bytes; manifests use it to pin inputs.
inline std::string content_hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_schema("cannot open file for hashing: '" + path + "'");
  uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

} // namespace tdm
