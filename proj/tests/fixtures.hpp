#pragma once

// Shared reference network used across the test suites: a 14-stop, two-metro
// two-bus toy system with a breakable metro link N9-N10 and four emergency
// candidates (two short-turns, a detour over the parallel track, and a bus
// bridge). data/ ships the same system as JSON.

#include <string>
#include <utility>
#include <vector>

#include "tdm/network.hpp"
#include "tdm/scenario.hpp"

namespace fixtures {

inline tdm::NetworkSpec reference_network_spec() {
  tdm::NetworkSpec spec;
  spec.mode_default_run_time = {{"metro", 4.0}, {"bus", 8.0}};
  auto stop = [&](const char* id, double x, double y) {
    spec.stops.push_back({id, x, y});
  };
  stop("N1", 0, 1); stop("N2", 4, 1); stop("N3", 0, 0); stop("N4", 4, 0);
  stop("N5", 1, 1); stop("N6", 1, 0); stop("N7", 2, 2); stop("N8", 2, -1);
  stop("N9", 2, 1); stop("N10", 3, 1); stop("N11", 2, 0); stop("N12", 3, 0);
  stop("N13", 0, 2); stop("N14", 4, 2);

  tdm::LineSpec l1;
  l1.id = "L1"; l1.mode = "metro";
  l1.stops = {"N1", "N5", "N9", "N10", "N2"};
  l1.round_trip_time = 36; l1.base_fleet = 3; l1.max_fleet = 6;
  l1.vehicle_capacity = 800;
  spec.lines.push_back(l1);

  tdm::LineSpec l2;
  l2.id = "L2"; l2.mode = "metro";
  l2.stops = {"N3", "N6", "N11", "N12", "N4", "N2"};
  l2.round_trip_time = 36; l2.base_fleet = 3; l2.max_fleet = 6;
  l2.vehicle_capacity = 800;
  spec.lines.push_back(l2);

  tdm::LineSpec l3;
  l3.id = "L3"; l3.mode = "bus";
  l3.stops = {"N3", "N1", "N13", "N7", "N14", "N2", "N4"};
  l3.round_trip_time = 96; l3.base_fleet = 18; l3.max_fleet = 36;
  l3.vehicle_capacity = 100;
  spec.lines.push_back(l3);

  tdm::LineSpec l4;
  l4.id = "L4"; l4.mode = "bus";
  l4.stops = {"N1", "N3", "N6", "N8", "N12", "N4", "N2"};
  l4.round_trip_time = 96; l4.base_fleet = 14; l4.max_fleet = 36;
  l4.vehicle_capacity = 100;
  spec.lines.push_back(l4);

  tdm::LineSpec dep;
  dep.id = "DEP_BUS"; dep.mode = "bus"; dep.kind = tdm::LineKind::depot;
  dep.base_fleet = 4; dep.max_fleet = 4; dep.vehicle_capacity = 100;
  spec.lines.push_back(dep);
  return spec;
}

inline tdm::NetworkSpec reference_emergency_spec() {
  tdm::NetworkSpec spec;
  spec.mode_default_run_time = {{"metro", 4.0}, {"bus", 8.0}};

  tdm::LineSpec l5;
  l5.id = "L5"; l5.mode = "metro"; l5.kind = tdm::LineKind::emergency;
  l5.emergency_kind = tdm::EmergencyKind::short_turn; l5.parent = "L1";
  l5.stops = {"N1", "N5", "N9"};
  l5.round_trip_time = 24; l5.max_fleet = 6; l5.vehicle_capacity = 800;
  spec.lines.push_back(l5);

  tdm::LineSpec l6;
  l6.id = "L6"; l6.mode = "metro"; l6.kind = tdm::LineKind::emergency;
  l6.emergency_kind = tdm::EmergencyKind::short_turn; l6.parent = "L1";
  l6.stops = {"N10", "N2"};
  l6.round_trip_time = 16; l6.max_fleet = 6; l6.vehicle_capacity = 800;
  spec.lines.push_back(l6);

  tdm::LineSpec l7;
  l7.id = "L7"; l7.mode = "metro"; l7.kind = tdm::LineKind::emergency;
  l7.emergency_kind = tdm::EmergencyKind::detour; l7.parent = "L1";
  l7.stops = {"N1", "N5", "N9", "N12", "N10", "N2"};
  l7.run_time_overrides = {{"N9", "N12", 6.0}, {"N12", "N10", 6.0}};
  l7.round_trip_time = 60; l7.max_fleet = 6; l7.vehicle_capacity = 800;
  spec.lines.push_back(l7);

  tdm::LineSpec l8;
  l8.id = "L8"; l8.mode = "bus"; l8.kind = tdm::LineKind::emergency;
  l8.emergency_kind = tdm::EmergencyKind::bridging;
  l8.stops = {"N9", "N10"};
  l8.round_trip_time = 32; l8.max_fleet = 10; l8.vehicle_capacity = 100;
  spec.lines.push_back(l8);
  return spec;
}

inline std::vector<tdm::BrokenLink> reference_broken_links() {
  return {tdm::BrokenLink{"L1", "N9", "N10", true}};
}

inline std::vector<std::pair<std::string, std::string>> reference_od_list() {
  return {{"N1", "N10"}, {"N5", "N14"}, {"N3", "N13"}, {"N8", "N11"},
          {"N11", "N2"}, {"N13", "N4"}, {"N14", "N1"}, {"N10", "N5"}};
}

inline tdm::TransitNetwork reference_normal_network(int k = 6) {
  return tdm::with_od_paths(tdm::build_network(reference_network_spec()),
                            reference_od_list(), k);
}

inline tdm::TransitNetwork reference_disrupted_network(int k = 6) {
  return tdm::apply_disruption(reference_normal_network(k),
                               reference_emergency_spec(),
                               reference_broken_links(), k);
}

// Deterministic 60-minute reference case: concave demand 10..12.5 on all
// eight OD pairs, alpha = 1, VOT 0.1 $/min.
inline tdm::Scenario reference_scenario_deterministic() {
  tdm::Scenario s;
  s.network = reference_network_spec();
  s.od_list = reference_od_list();
  for (size_t i = 0; i < s.od_list.size(); ++i)
    s.od_demand.push_back({tdm::DemandShape::concave, 10.0, 12.5, 0.0});
  s.emergency = reference_emergency_spec();
  s.broken = reference_broken_links();
  s.duration_kind = tdm::DurationKind::diracTbar;
  s.costs.alpha = 1.0;
  s.costs.beta = 0.1;
  s.costs.gamma = 1.0;
  s.time = {60.0, 10.0, 10.0, 10.0, 60.0};
  s.solver.k_paths = 6;
  s.validate();
  return s;
}

// Stochastic four-hour reference case: configurable demand shape and
// duration distribution, alpha = 2, demand level 10..20.
inline tdm::Scenario reference_scenario_stochastic(
    tdm::DemandShape shape = tdm::DemandShape::uniform,
    tdm::DurationKind kind = tdm::DurationKind::uniform, double alpha = 2.0) {
  tdm::Scenario s;
  s.network = reference_network_spec();
  s.od_list = reference_od_list();
  for (size_t i = 0; i < s.od_list.size(); ++i)
    s.od_demand.push_back({shape, 10.0, 20.0, 0.0});
  s.emergency = reference_emergency_spec();
  s.broken = reference_broken_links();
  s.duration_kind = kind;
  s.costs.alpha = alpha;
  s.costs.beta = 0.1;
  s.costs.gamma = 1.0;
  s.time = {240.0, 10.0, 10.0, 10.0, -1.0};
  s.solver.k_paths = 6;
  s.validate();
  return s;
}

// A four-stop miniature with one breakable link, a metro short-turn, a bus
// bridge and a bus depot; small enough to solve to near-optimality in
// milliseconds. Used wherever tests need full solves.
inline tdm::Scenario mini_scenario(
    tdm::DurationKind kind = tdm::DurationKind::diracTbar,
    double deterministic_T = 60.0, double alpha = 1.0) {
  tdm::Scenario s;
  s.network.mode_default_run_time = {{"metro", 4.0}, {"bus", 6.0}};
  s.network.stops = {{"A", 0, 0}, {"B", 1, 0}, {"C", 2, 0}, {"D", 1, 1}};
  tdm::LineSpec m1;
  m1.id = "M1"; m1.mode = "metro"; m1.stops = {"A", "B", "C"};
  m1.round_trip_time = 20; m1.base_fleet = 2; m1.max_fleet = 4;
  m1.vehicle_capacity = 60;
  s.network.lines.push_back(m1);
  tdm::LineSpec m2;
  m2.id = "M2"; m2.mode = "metro"; m2.stops = {"A", "D", "C"};
  m2.round_trip_time = 24; m2.base_fleet = 2; m2.max_fleet = 4;
  m2.vehicle_capacity = 60;
  s.network.lines.push_back(m2);
  tdm::LineSpec b1;
  b1.id = "B1"; b1.mode = "bus"; b1.stops = {"A", "D"};
  b1.round_trip_time = 30; b1.base_fleet = 2; b1.max_fleet = 8;
  b1.vehicle_capacity = 30;
  s.network.lines.push_back(b1);
  tdm::LineSpec dep;
  dep.id = "DEP"; dep.mode = "bus"; dep.kind = tdm::LineKind::depot;
  dep.base_fleet = 2; dep.max_fleet = 2; dep.vehicle_capacity = 30;
  s.network.lines.push_back(dep);

  s.emergency.mode_default_run_time = s.network.mode_default_run_time;
  tdm::LineSpec e1;
  e1.id = "E1"; e1.mode = "metro"; e1.kind = tdm::LineKind::emergency;
  e1.emergency_kind = tdm::EmergencyKind::short_turn; e1.parent = "M1";
  e1.stops = {"A", "B"}; e1.round_trip_time = 10; e1.max_fleet = 4;
  e1.vehicle_capacity = 60;
  s.emergency.lines.push_back(e1);
  tdm::LineSpec e2;
  e2.id = "E2"; e2.mode = "bus"; e2.kind = tdm::LineKind::emergency;
  e2.emergency_kind = tdm::EmergencyKind::bridging;
  e2.stops = {"B", "C"}; e2.round_trip_time = 10; e2.max_fleet = 8;
  e2.vehicle_capacity = 30;
  s.emergency.lines.push_back(e2);

  s.broken = {tdm::BrokenLink{"M1", "B", "C", true}};
  s.od_list = {{"A", "C"}, {"A", "B"}};
  s.od_demand = {{tdm::DemandShape::uniform, 3.0, 3.0, 0.0},
                 {tdm::DemandShape::uniform, 1.0, 1.0, 0.0}};
  s.duration_kind = kind;
  s.costs.alpha = alpha;
  s.costs.beta = 0.1;
  s.costs.gamma = 1.0;
  s.time = {60.0, 10.0, 10.0, 10.0, deterministic_T};
  s.solver.k_paths = 4;
  s.validate();
  return s;
}

struct BuiltScenario {
  tdm::Scenario scenario;
  tdm::TransitNetwork normal;
  tdm::TransitNetwork disrupted;
};

inline BuiltScenario build(const tdm::Scenario& s) {
  BuiltScenario out;
  out.scenario = s;
  out.normal = tdm::with_od_paths(tdm::build_network(s.network), s.od_list,
                                  s.solver.k_paths);
  out.disrupted =
      tdm::apply_disruption(out.normal, s.emergency, s.broken, s.solver.k_paths);
  return out;
}

} // namespace fixtures
