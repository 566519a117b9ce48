#pragma once

// Multimodal transit network: stops, directed line segments, lines, and
// enumerated origin-destination paths. Everything is a value type; operations
// return new networks instead of mutating.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdm/error.hpp"

namespace tdm {

enum class LineKind { regular, emergency, depot };
enum class EmergencyKind { none, short_turn, detour, bridging };

struct Stop {
  std::string id;
  double x = 0.0, y = 0.0;
};

struct Segment {
  std::string id;      // "<line>:<from>><to>"
  int line = -1;
  int from = -1, to = -1;
  double run_time = 0.0; // minutes
};

struct Line {
  std::string id;
  std::string mode;
  LineKind kind = LineKind::regular;
  EmergencyKind emergency_kind = EmergencyKind::none;
  std::string parent;            // owning line for short-turns / detours
  std::vector<int> stops;        // ordered stop indices
  double round_trip_time = 0.0;  // minutes, R_l
  double base_fleet = 0.0;       // y_l^0
  double max_fleet = 0.0;        // Y_l
  double vehicle_capacity = 0.0; // K
};

struct ODPair {
  int origin = -1, destination = -1;
  std::string key; // "<origin>-><destination>"
};

struct Path {
  int od = -1;
  std::vector<int> segs;       // segment indices in traversal order
  std::vector<int> boardings;  // positions within segs starting a line run
  double run_time = 0.0;       // sum of segment run times
  double rank_cost = 0.0;      // enumeration ranking cost

  bool is_boarding(size_t pos) const {
    return std::find(boardings.begin(), boardings.end(), static_cast<int>(pos)) !=
           boardings.end();
  }
};

// Input description consumed by build_network.
struct LineSpec {
  std::string id, mode;
  LineKind kind = LineKind::regular;
  EmergencyKind emergency_kind = EmergencyKind::none;
  std::string parent;
  std::vector<std::string> stops;
  double round_trip_time = 0.0;
  double base_fleet = 0.0;
  double max_fleet = 0.0;
  double vehicle_capacity = 0.0;
  struct Override {
    std::string from, to;
    double minutes = 0.0;
  };
  std::vector<Override> run_time_overrides; // applies to both directions
};

struct NetworkSpec {
  std::map<std::string, double> mode_default_run_time;
  std::vector<Stop> stops;
  std::vector<LineSpec> lines;
};

struct TransitNetwork {
  std::vector<Stop> stops;
  std::vector<Segment> segments;
  std::vector<Line> lines;
  std::vector<ODPair> od_pairs;
  std::vector<std::vector<Path>> paths; // per OD pair, rank order
  double transfer_penalty = 5.0;        // ranking surcharge per extra boarding

  int stop_index(const std::string& id) const {
    for (size_t i = 0; i < stops.size(); ++i)
      if (stops[i].id == id) return static_cast<int>(i);
    return -1;
  }
  int line_index(const std::string& id) const {
    for (size_t i = 0; i < lines.size(); ++i)
      if (lines[i].id == id) return static_cast<int>(i);
    return -1;
  }
  int find_segment(const std::string& line_id, const std::string& from,
                   const std::string& to) const {
    int li = line_index(line_id), f = stop_index(from), t = stop_index(to);
    for (size_t s = 0; s < segments.size(); ++s)
      if (segments[s].line == li && segments[s].from == f && segments[s].to == t)
        return static_cast<int>(s);
    return -1;
  }

  // Lines the path boards, in boarding order (line of each boarding segment).
  std::vector<int> boarded_lines(const Path& h) const {
    std::vector<int> out;
    for (int pos : h.boardings) out.push_back(segments[h.segs[pos]].line);
    return out;
  }
  bool path_uses_line(const Path& h, int line) const {
    for (int s : h.segs)
      if (segments[s].line == line) return true;
    return false;
  }
};

inline TransitNetwork build_network(const NetworkSpec& spec) {
  TransitNetwork net;
  // Stops.
  std::set<std::string> seen;
  for (const auto& s : spec.stops) {
    if (!seen.insert(s.id).second) fail_schema("duplicate stop id '" + s.id + "'");
    net.stops.push_back(s);
  }
  // Lines and their directed segments.
  std::set<std::string> seen_lines;
  for (const auto& ls : spec.lines) {
    if (!seen_lines.insert(ls.id).second)
      fail_schema("duplicate line id '" + ls.id + "'");
    Line line;
    line.id = ls.id;
    line.mode = ls.mode;
    line.kind = ls.kind;
    line.emergency_kind = ls.emergency_kind;
    line.parent = ls.parent;
    line.round_trip_time = ls.round_trip_time;
    line.base_fleet = ls.base_fleet;
    line.max_fleet = ls.max_fleet;
    line.vehicle_capacity = ls.vehicle_capacity;
    if (!spec.mode_default_run_time.count(ls.mode))
      fail_schema("line '" + ls.id + "' uses undeclared mode '" + ls.mode + "'");
    if (line.kind != LineKind::depot) {
      if (line.round_trip_time <= 0.0)
        fail_schema("line '" + ls.id + "' needs a positive round trip time");
      if (ls.stops.size() < 2)
        fail_schema("line '" + ls.id + "' needs at least two stops");
    } else if (!ls.stops.empty()) {
      fail_schema("depot line '" + ls.id + "' must not serve stops");
    }
    if (line.base_fleet < 0.0 || line.max_fleet < line.base_fleet)
      fail_schema("line '" + ls.id + "' violates 0 <= base_fleet <= max_fleet");
    if (line.kind == LineKind::emergency && line.base_fleet != 0.0)
      fail_schema("emergency line '" + ls.id + "' must start with zero fleet");
    if (line.kind != LineKind::depot && line.vehicle_capacity <= 0.0)
      fail_schema("line '" + ls.id + "' needs a positive vehicle capacity");
    for (const auto& sid : ls.stops) {
      int idx = net.stop_index(sid);
      if (idx < 0)
        fail_schema("line '" + ls.id + "' references unknown stop '" + sid + "'");
      line.stops.push_back(idx);
    }
    int li = static_cast<int>(net.lines.size());
    net.lines.push_back(line);

    double def = spec.mode_default_run_time.at(ls.mode);
    if (def <= 0.0) fail_schema("mode '" + ls.mode + "' default run time must be > 0");
    auto override_minutes = [&](int a, int b) -> std::optional<double> {
      for (const auto& ov : ls.run_time_overrides) {
        int f = net.stop_index(ov.from), t = net.stop_index(ov.to);
        if (f < 0 || t < 0)
          fail_schema("run time override on '" + ls.id + "' references unknown stop");
        if ((f == a && t == b) || (f == b && t == a)) return ov.minutes;
      }
      return std::nullopt;
    };
    for (size_t i = 0; i + 1 < line.stops.size(); ++i) {
      int a = line.stops[i], b = line.stops[i + 1];
      double rt = override_minutes(a, b).value_or(def);
      if (rt <= 0.0)
        fail_schema("segment run time must be positive on line '" + ls.id + "'");
      for (auto [f, t] : {std::pair{a, b}, std::pair{b, a}}) {
        Segment seg;
        seg.line = li;
        seg.from = f;
        seg.to = t;
        seg.run_time = rt;
        seg.id = ls.id + ":" + net.stops[f].id + ">" + net.stops[t].id;
        net.segments.push_back(seg);
      }
    }
  }
  // Uniqueness of (line, from, to).
  std::set<std::tuple<int, int, int>> seg_keys;
  for (const auto& s : net.segments)
    if (!seg_keys.insert({s.line, s.from, s.to}).second)
      fail_schema("line '" + net.lines[s.line].id + "' visits a stop pair twice");
  return net;
}

// All loopless paths (no repeated stop) between the OD pair, ranked by run
// time plus a fixed transfer surcharge per boarding beyond the first.
// Ties break on the lexicographic segment-id sequence, so enumeration is
// deterministic. Suited to the desk-scale networks this library targets.
inline std::vector<Path> enumerate_paths(const TransitNetwork& net, int origin,
                                         int destination, int k,
                                         int max_segments = 16,
                                         const std::vector<char>* segment_mask = nullptr) {
  if (origin == destination) fail_schema("degenerate OD pair");
  if (k < 1) fail_schema("path count k must be >= 1");

  // Outgoing segment indices per stop, pre-sorted by segment id for
  // deterministic traversal.
  std::vector<std::vector<int>> out(net.stops.size());
  for (size_t s = 0; s < net.segments.size(); ++s) {
    if (segment_mask && !(*segment_mask)[s]) continue;
    out[net.segments[s].from].push_back(static_cast<int>(s));
  }
  for (auto& v : out)
    std::sort(v.begin(), v.end(), [&](int a, int b) {
      return net.segments[a].id < net.segments[b].id;
    });

  std::vector<Path> found;
  std::vector<int> seg_stack;
  std::vector<char> visited(net.stops.size(), 0);
  visited[origin] = 1;

  constexpr size_t kMaxPaths = 200000;
  auto dfs = [&](auto&& self, int stop, int last_line) -> void {
    if (stop == destination) {
      Path h;
      h.segs = seg_stack;
      int prev_line = -1;
      for (size_t i = 0; i < h.segs.size(); ++i) {
        const Segment& seg = net.segments[h.segs[i]];
        h.run_time += seg.run_time;
        if (seg.line != prev_line) h.boardings.push_back(static_cast<int>(i));
        prev_line = seg.line;
      }
      h.rank_cost = h.run_time +
                    net.transfer_penalty * (static_cast<double>(h.boardings.size()) - 1.0);
      found.push_back(std::move(h));
      if (found.size() > kMaxPaths)
        fail_schema("path enumeration exploded; network too dense for DFS");
      return;
    }
    if (static_cast<int>(seg_stack.size()) >= max_segments) return;
    for (int si : out[stop]) {
      const Segment& seg = net.segments[si];
      if (visited[seg.to]) continue;
      visited[seg.to] = 1;
      seg_stack.push_back(si);
      self(self, seg.to, seg.line);
      seg_stack.pop_back();
      visited[seg.to] = 0;
    }
  };
  dfs(dfs, origin, -1);

  auto id_seq_less = [&](const Path& a, const Path& b) {
    size_t n = std::min(a.segs.size(), b.segs.size());
    for (size_t i = 0; i < n; ++i) {
      const std::string& ia = net.segments[a.segs[i]].id;
      const std::string& ib = net.segments[b.segs[i]].id;
      if (ia != ib) return ia < ib;
    }
    return a.segs.size() < b.segs.size();
  };
  std::sort(found.begin(), found.end(), [&](const Path& a, const Path& b) {
    if (a.rank_cost != b.rank_cost) return a.rank_cost < b.rank_cost;
    return id_seq_less(a, b);
  });
  if (static_cast<int>(found.size()) > k) found.resize(k);
  return found;
}

// Attach OD pairs and enumerate their path sets.
inline TransitNetwork with_od_paths(TransitNetwork net,
                                    const std::vector<std::pair<std::string, std::string>>& ods,
                                    int k, bool require_connected = true) {
  net.od_pairs.clear();
  net.paths.clear();
  for (const auto& [o, d] : ods) {
    int oi = net.stop_index(o), di = net.stop_index(d);
    if (oi < 0) fail_schema("OD references unknown stop '" + o + "'");
    if (di < 0) fail_schema("OD references unknown stop '" + d + "'");
    if (oi == di) fail_schema("degenerate OD pair '" + o + "->" + d + "'");
    ODPair od;
    od.origin = oi;
    od.destination = di;
    od.key = o + "->" + d;
    int w = static_cast<int>(net.od_pairs.size());
    net.od_pairs.push_back(od);
    auto hs = enumerate_paths(net, oi, di, k);
    for (auto& h : hs) h.od = w;
    if (hs.empty() && require_connected)
      fail_infeasible("OD pair " + od.key + " has no path");
    net.paths.push_back(std::move(hs));
  }
  return net;
}

// Average path cost at fleet y: headway wait gamma*R/(2y) per boarding plus
// total run time.
inline double path_cost(const TransitNetwork& net, const Path& h,
                        const std::vector<double>& fleet, double gamma,
                        double epsilon) {
  double cost = h.run_time;
  for (int pos : h.boardings) {
    int l = net.segments[h.segs[pos]].line;
    double y = fleet.at(l);
    if (y < epsilon)
      fail_infeasible("unserved line on path: '" + net.lines[l].id + "'");
    cost += gamma * net.lines[l].round_trip_time / (2.0 * y);
  }
  return cost;
}

struct BrokenLink {
  std::string line;      // empty = all lines crossing the stop pair
  std::string from, to;
  bool bidirectional = true;
};

// Returns a new network with the broken segments removed and the emergency
// candidates added (zero base fleet), path sets re-enumerated. The input is
// left untouched; callers keep it for normal-condition references.
inline TransitNetwork apply_disruption(const TransitNetwork& base,
                                       const NetworkSpec& emergency_spec,
                                       const std::vector<BrokenLink>& broken,
                                       int k) {
  TransitNetwork net = base;
  // Remove broken segments.
  for (const auto& b : broken) {
    int f = net.stop_index(b.from), t = net.stop_index(b.to);
    if (f < 0 || t < 0)
      fail_schema("broken link references unknown stop '" + b.from + "'/'" + b.to + "'");
    int li = b.line.empty() ? -2 : net.line_index(b.line);
    if (li == -1) fail_schema("broken link references unknown line '" + b.line + "'");
    bool hit = false;
    auto matches = [&](const Segment& s) {
      if (li >= 0 && s.line != li) return false;
      if (s.from == f && s.to == t) return true;
      if (b.bidirectional && s.from == t && s.to == f) return true;
      return false;
    };
    for (const auto& s : net.segments) hit = hit || matches(s);
    if (!hit)
      fail_schema("broken link " + b.from + "-" + b.to + " matches no segment");
    std::erase_if(net.segments, matches);
  }
  // Add emergency lines by building them in a scratch network that shares the
  // stop table, then splicing lines and segments in.
  if (!emergency_spec.lines.empty()) {
    NetworkSpec scratch = emergency_spec;
    scratch.stops = net.stops;
    TransitNetwork built = build_network(scratch);
    int line_off = static_cast<int>(net.lines.size());
    for (const auto& l : built.lines) {
      if (net.line_index(l.id) >= 0)
        fail_schema("emergency line id '" + l.id + "' already exists");
      if (l.kind == LineKind::regular)
        fail_schema("disruption section may only add emergency or depot lines");
      net.lines.push_back(l);
    }
    for (Segment s : built.segments) {
      s.line += line_off;
      net.segments.push_back(s);
    }
  }
  // Re-enumerate paths; every OD pair must stay connected. Emergency lines
  // start with no fleet, so each OD keeps its two best emergency-free paths
  // inside the k budget; without them the no-relocation reference assignment
  // has nothing to ride.
  std::vector<std::pair<std::string, std::string>> ods;
  for (const auto& od : net.od_pairs)
    ods.push_back({net.stops[od.origin].id, net.stops[od.destination].id});
  net.paths.clear();
  TransitNetwork out = with_od_paths(std::move(net), ods, k, false);
  const int n_fallback = std::min(3, k);
  for (size_t w = 0; w < out.od_pairs.size(); ++w) {
    auto& paths = out.paths[w];
    auto uses_emergency = [&](const Path& h) {
      for (int s : h.segs)
        if (out.lines[out.segments[s].line].kind == LineKind::emergency) return true;
      return false;
    };
    int have = 0;
    for (const auto& h : paths)
      if (!uses_emergency(h)) ++have;
    if (have < n_fallback) {
      std::vector<char> mask(out.segments.size(), 1);
      for (size_t s = 0; s < out.segments.size(); ++s)
        if (out.lines[out.segments[s].line].kind == LineKind::emergency) mask[s] = 0;
      auto fallback = enumerate_paths(out, out.od_pairs[w].origin,
                                      out.od_pairs[w].destination, n_fallback,
                                      16, &mask);
      for (const auto& h : fallback) {
        if (have >= n_fallback) break;
        bool dup = false;
        for (const auto& g : paths) dup = dup || (g.segs == h.segs);
        if (dup) continue;
        Path copy = h;
        copy.od = static_cast<int>(w);
        paths.push_back(copy);
        ++have;
      }
      // Trim back to k, dropping the costliest emergency paths first.
      while (static_cast<int>(paths.size()) > k) {
        int drop = -1;
        for (int i = static_cast<int>(paths.size()) - 1; i >= 0; --i)
          if (uses_emergency(paths[i])) {
            drop = i;
            break;
          }
        if (drop < 0) break;
        paths.erase(paths.begin() + drop);
      }
      std::sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
        return a.rank_cost < b.rank_cost;
      });
    }
    if (paths.empty())
      fail_infeasible("disruption disconnects OD pair " + out.od_pairs[w].key);
  }
  for (size_t w = 0; w < out.od_pairs.size(); ++w)
    if (out.paths[w].empty())
      fail_infeasible("disruption disconnects OD pair " + out.od_pairs[w].key);
  return out;
}

} // namespace tdm
