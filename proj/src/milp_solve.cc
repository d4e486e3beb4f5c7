#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <queue>
#include <set>

#include "ntnqos/milp.h"

namespace ntnqos {
namespace {

// Follows the x = 1 links of one slice from its edge satellite. At each
// satellite a feeder into the destination is taken in preference to an ISL,
// which drops detached cycles and any loop back through the edge satellite.
std::optional<std::vector<int>> WalkRoute(const MilpModel& model, int slice,
                                          std::span<const double> values) {
  const Topology& topo = model.topology();
  const SliceVariables& v = model.slice_vars()[slice];
  std::map<int, std::vector<int>> out;  // src node -> link ids with x = 1
  for (size_t k = 0; k < v.links.size(); ++k) {
    if (std::round(values[v.x[k]]) == 1.0) {
      out[topo.link(v.links[k]).src].push_back(v.links[k]);
    }
  }
  std::vector<int> route;
  std::set<int> visited;
  int cur = model.slices()[slice].edge_satellite;
  visited.insert(cur);
  while (true) {
    auto it = out.find(cur);
    if (it == out.end()) return std::nullopt;
    int next_link = -1;
    for (int e : it->second) {
      if (topo.link(e).kind == LinkKind::kFeeder) {
        route.push_back(e);
        return route;
      }
      if (next_link < 0) next_link = e;
    }
    if (next_link < 0) return std::nullopt;
    cur = topo.link(next_link).dst;
    if (!visited.insert(cur).second) return std::nullopt;
    route.push_back(next_link);
  }
}

// Least-weight route of one slice from its edge satellite to its
// destination, as positions in the slice's link list. `weight` maps a
// position to a non-negative cost. Empty when the destination is unreachable.
template <typename Weight>
std::vector<size_t> LeastWeightRoute(const MilpModel& model, size_t slice, Weight weight) {
  const Topology& topo = model.topology();
  const SliceVariables& v = model.slice_vars()[slice];
  std::map<int, std::vector<size_t>> out;
  for (size_t k = 0; k < v.links.size(); ++k) out[topo.link(v.links[k]).src].push_back(k);
  std::map<int, double> dist;
  std::map<int, size_t> via;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const int source = model.slices()[slice].edge_satellite;
  const int target = model.slices()[slice].destination;
  dist[source] = 0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, n] = queue.top();
    queue.pop();
    if (d > dist[n] || n == target) continue;
    for (size_t k : out[n]) {
      int m = topo.link(v.links[k]).dst;
      double nd = d + weight(k);
      auto it = dist.find(m);
      if (it == dist.end() || nd < it->second) {
        dist[m] = nd;
        via[m] = k;
        queue.emplace(nd, m);
      }
    }
  }
  std::vector<size_t> route;
  if (!dist.count(target)) return route;
  for (int n = target; n != source;) {
    size_t k = via.at(n);
    route.push_back(k);
    n = topo.link(v.links[k]).src;
  }
  return route;
}

}  // namespace

Solution Solve(const MilpModel& model, const SolveOptions& options) {
  IncumbentRepair repair =
      [&model](std::span<const double> values) -> std::optional<std::vector<double>> {
    std::vector<double> fixed(values.begin(), values.end());
    for (size_t i = 0; i < model.slices().size(); ++i) {
      std::optional<std::vector<int>> route =
          WalkRoute(model, static_cast<int>(i), values);
      if (!route) return std::nullopt;
      const SliceVariables& v = model.slice_vars()[i];
      std::set<int> keep(route->begin(), route->end());
      for (size_t k = 0; k < v.links.size(); ++k) {
        fixed[v.x[k]] = keep.count(v.links[k]) ? 1.0 : 0.0;
      }
    }
    return fixed;
  };

  // Rounds the LP point to one route per slice: the route carrying the most
  // x mass, unless a faster route has a smaller latency gap.
  IncumbentHeuristic heuristic =
      [&model](std::span<const double> values) -> std::vector<std::vector<double>> {
    const Topology& topo = model.topology();
    std::vector<double> fixed(values.begin(), values.end());
    for (size_t i = 0; i < model.slices().size(); ++i) {
      const SliceVariables& v = model.slice_vars()[i];
      auto latency_ms = [&](size_t k) {
        return topo.link(v.links[k]).latency_s / kModelTimeUnitS;
      };
      auto gap_ms = [&](const std::vector<size_t>& route) {
        double l = 0;
        for (size_t k : route) l += latency_ms(k);
        return std::max(0.0, l - model.slices()[i].governing_pdb_s / kModelTimeUnitS);
      };
      std::vector<size_t> route = LeastWeightRoute(model, i, [&](size_t k) {
        return (1.0 - std::clamp(values[v.x[k]], 0.0, 1.0)) * 1e3 + latency_ms(k);
      });
      if (route.empty()) return {};
      std::vector<size_t> fastest = LeastWeightRoute(model, i, latency_ms);
      if (gap_ms(fastest) < gap_ms(route) - 1e-9) route = std::move(fastest);
      for (int x : v.x) fixed[x] = 0.0;
      for (size_t k : route) fixed[v.x[k]] = 1.0;
    }
    return {fixed};
  };

  MipResult mip = SolveMilp(model.problem(), options, repair, heuristic);
  Solution sol;
  sol.status = mip.status;
  sol.has_incumbent = mip.has_incumbent;
  sol.best_bound = mip.best_bound;
  sol.solve_time_s = mip.solve_time_s;
  sol.nodes = mip.nodes;
  sol.lp_iterations = mip.lp_iterations;
  sol.slices.resize(model.slices().size());
  if (!mip.has_incumbent) return sol;

  sol.objective = mip.objective;
  sol.values = mip.values;
  const Topology& topo = model.topology();
  for (size_t i = 0; i < model.slices().size(); ++i) {
    const SliceVariables& v = model.slice_vars()[i];
    SliceRoute& out = sol.slices[i];
    out.allocated_bps = sol.values[v.b] * kModelFlowUnitBps;
    out.flow_gap_bps = sol.values[v.flow_gap] * kModelFlowUnitBps;
    out.latency_gap_s = sol.values[v.latency_gap] * kModelTimeUnitS;
    for (size_t k = 0; k < v.links.size(); ++k) {
      if (std::round(sol.values[v.x[k]]) == 1.0) {
        out.link_flows_bps.emplace_back(v.links[k],
                                        sol.values[v.f[k]] * kModelFlowUnitBps);
      }
    }
    if (std::optional<std::vector<int>> route =
            WalkRoute(model, static_cast<int>(i), sol.values)) {
      out.has_route = true;
      out.route = std::move(*route);
      for (int e : out.route) out.latency_s += topo.link(e).latency_s;
    }
  }
  return sol;
}

std::vector<std::string> VerifySolution(std::span<const Slice> slices,
                                        const Topology& topology,
                                        const Solution& solution,
                                        double tolerance) {
  std::vector<std::string> errors;
  auto fail = [&errors](std::string msg) { errors.push_back(std::move(msg)); };
  if (!solution.has_incumbent) return errors;
  if (solution.slices.size() != slices.size()) {
    fail("solution and slice counts differ");
    return errors;
  }
  const double mbps = kModelFlowUnitBps;
  std::map<int, double> link_load;

  for (size_t i = 0; i < slices.size(); ++i) {
    const Slice& s = slices[i];
    const SliceRoute& r = solution.slices[i];
    const double b = r.allocated_bps / mbps;
    if (b < -tolerance || b > s.demand_bps / mbps + tolerance) {
      fail(fmt::format("slice {}: b outside [0, r_s]", i));
    }
    std::map<int, double> net;         // inflow minus outflow per node
    std::map<int, int> x_out, x_in, isl_out, isl_in;
    int feeders_into_dest = 0;
    std::set<int> active;
    double edge_out = 0;
    for (const auto& [e, f_bps] : r.link_flows_bps) {
      const Link& l = topology.link(e);
      const double f = f_bps / mbps;
      active.insert(e);
      if (f < -tolerance) fail(fmt::format("slice {}: negative flow on link {}", i, e));
      if (f > l.capacity_bps / mbps + tolerance) {
        fail(fmt::format("slice {}: flow exceeds capacity on active link {}", i, e));
      }
      if (l.kind == LinkKind::kUser) {
        fail(fmt::format("slice {}: user link {} is routed", i, e));
      }
      if (l.kind == LinkKind::kFeeder) {
        if (l.dst != s.destination) {
          fail(fmt::format("slice {}: feeder {} into a foreign ground station", i, e));
        } else {
          ++feeders_into_dest;
        }
      }
      link_load[e] += f;
      net[l.dst] += f;
      net[l.src] -= f;
      if (l.src == s.edge_satellite) edge_out += f;
      ++x_out[l.src];
      ++x_in[l.dst];
      if (l.kind == LinkKind::kInterSatellite) {
        ++isl_out[l.src];
        ++isl_in[l.dst];
      }
    }

    if (std::abs(b - edge_out) > tolerance) {
      fail(fmt::format("slice {}: b differs from flow leaving the edge", i));
    }
    for (int n : topology.satellites()) {
      double injected = n == s.edge_satellite ? b : 0.0;
      if (std::abs(net[n] + injected) > tolerance) {
        fail(fmt::format("slice {}: flow not conserved at satellite {}", i, n));
      }
      int want = n == s.edge_satellite ? 1 : 0;
      if (x_out[n] - x_in[n] != want) {
        fail(fmt::format("slice {}: x degree unbalanced at satellite {}", i, n));
      }
      if (isl_in[n] > 1 || isl_out[n] > 1) {
        fail(fmt::format("slice {}: more than one ISL in or out at {}", i, n));
      }
    }
    for (int g : topology.ground_stations()) {
      double want = g == s.destination ? b : 0.0;
      if (std::abs(net[g] - want) > tolerance) {
        fail(fmt::format("slice {}: ground station {} receives wrong flow", i, g));
      }
    }
    if (feeders_into_dest > 1) {
      fail(fmt::format("slice {}: more than one feeder into d_i", i));
    }

    // The active set must be exactly one simple path ending in d_i.
    if (!r.has_route) {
      fail(fmt::format("slice {}: no route", i));
      continue;
    }
    std::set<int> nodes{s.edge_satellite};
    int cur = s.edge_satellite;
    double latency = 0;
    for (int e : r.route) {
      const Link& l = topology.link(e);
      if (l.src != cur) fail(fmt::format("slice {}: route is not contiguous", i));
      cur = l.dst;
      if (!nodes.insert(cur).second) {
        fail(fmt::format("slice {}: route revisits node {}", i, cur));
      }
      latency += l.latency_s;
    }
    if (cur != s.destination) fail(fmt::format("slice {}: route misses d_i", i));
    if (std::set<int>(r.route.begin(), r.route.end()) != active) {
      fail(fmt::format("slice {}: active links are not a single path", i));
    }
    const double ms = kModelTimeUnitS;
    if (std::abs(latency - r.latency_s) / ms > tolerance) {
      fail(fmt::format("slice {}: latency is not the route sum", i));
    }
    if (r.flow_gap_bps / mbps < (s.demand_bps - r.allocated_bps) / mbps - tolerance ||
        r.flow_gap_bps < -tolerance * mbps) {
      fail(fmt::format("slice {}: flow slack below the gap", i));
    }
    if (r.latency_gap_s / ms < (latency - s.governing_pdb_s) / ms - tolerance ||
        r.latency_gap_s < -tolerance * ms) {
      fail(fmt::format("slice {}: latency slack below the gap", i));
    }
  }

  for (const auto& [e, load] : link_load) {
    if (load > topology.link(e).capacity_bps / mbps + tolerance) {
      fail(fmt::format("link {}: total flow exceeds capacity", e));
    }
  }
  return errors;
}

}  // namespace ntnqos
