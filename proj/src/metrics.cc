#include "ntnqos/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace ntnqos {

std::vector<TrafficOutcome> Redistribute(const Solution& solution,
                                         std::span<const Slice> slices,
                                         std::span<const NtnTraffic> traffic,
                                         std::span<const Flow5G> flows,
                                         const Topology& topology,
                                         bool end_to_end) {
  std::map<int, const NtnTraffic*> traffic_by_id;
  for (const NtnTraffic& t : traffic) traffic_by_id[t.id] = &t;
  std::map<int, size_t> flow_index;
  for (size_t k = 0; k < flows.size(); ++k) flow_index[flows[k].id] = k;

  std::vector<TrafficOutcome> out(flows.size());
  std::vector<bool> covered(flows.size(), false);
  for (size_t k = 0; k < flows.size(); ++k) {
    out[k].flow_id = flows[k].id;
    out[k].required_bps = flows[k].demand_bps;
    out[k].pdb_s = PdbSeconds(flows[k].five_qi);
  }

  for (size_t i = 0; i < slices.size(); ++i) {
    const Slice& s = slices[i];
    const bool solved = solution.has_incumbent && i < solution.slices.size();
    const SliceRoute* route = solved ? &solution.slices[i] : nullptr;
    const double b = route ? route->allocated_bps : 0.0;
    const bool routed = route && route->has_route;
    for (int member : s.members) {
      auto it = traffic_by_id.find(member);
      if (it == traffic_by_id.end()) {
        throw UncoveredFlowError(fmt::format("slice {} names unknown NTN traffic {}",
                                             s.id, member));
      }
      const NtnTraffic& t = *it->second;
      const double b_n = s.demand_bps > 0 ? b * t.demand_bps / s.demand_bps : 0.0;
      double user_latency = 0;
      if (end_to_end) {
        int gnb_node = topology.gnbs().at(t.gnb);
        if (std::optional<int> ul = topology.UserLinkOf(gnb_node)) {
          user_latency = topology.link(*ul).latency_s;
        }
      }
      for (int fid : t.flow_ids) {
        auto fit = flow_index.find(fid);
        if (fit == flow_index.end()) continue;
        TrafficOutcome& o = out[fit->second];
        o.slice_id = s.id;
        o.allocated_bps =
            t.requested_bps > 0 ? b_n * o.required_bps / t.requested_bps : 0.0;
        o.routed = routed;
        o.latency_s = routed ? route->latency_s + user_latency : 0.0;
        covered[fit->second] = true;
      }
    }
  }
  for (size_t k = 0; k < flows.size(); ++k) {
    if (!covered[k]) {
      throw UncoveredFlowError(fmt::format("flow {} is in no slice", flows[k].id));
    }
  }
  return out;
}

Satisfaction ComputeSatisfaction(std::span<const TrafficOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("no traffic outcomes");
  Satisfaction s;
  double flow_sum = 0, lat_sum = 0;
  int routed = 0;
  for (const TrafficOutcome& o : outcomes) {
    flow_sum += o.allocated_bps / o.required_bps;
    if (o.routed) {
      lat_sum += 1.0 - o.latency_s / o.pdb_s;
      ++routed;
    }
  }
  s.num_flows = static_cast<int>(outcomes.size());
  s.num_unrouted = s.num_flows - routed;
  s.sbar_f = flow_sum / s.num_flows;
  s.sbar_l = routed > 0 ? lat_sum / routed : std::numeric_limits<double>::quiet_NaN();
  return s;
}

CostBreakdown EvaluateCost(std::span<const double> flow_gaps_bps,
                           std::span<const double> latency_gaps_s,
                           const OptimizationWeights& weights) {
  weights.Validate();
  if (flow_gaps_bps.size() != latency_gaps_s.size() || flow_gaps_bps.empty()) {
    throw std::invalid_argument("gap vectors must be nonempty and equal length");
  }
  const double n = static_cast<double>(flow_gaps_bps.size());
  double sf = 0, sl = 0;
  for (double g : flow_gaps_bps) sf += g;
  for (double g : latency_gaps_s) sl += g;
  CostBreakdown c;
  c.flow_term = weights.w_flow / (n * weights.flow_norm_bps) * sf;
  c.latency_term = weights.w_latency / (n * weights.latency_norm_s) * sl;
  c.total = c.flow_term + c.latency_term;
  return c;
}

CostBreakdown EvaluateSolutionCost(const Solution& solution,
                                   std::span<const Slice> slices,
                                   const OptimizationWeights& weights) {
  if (!solution.has_incumbent) {
    double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  std::vector<double> sf, sl;
  for (size_t i = 0; i < slices.size(); ++i) {
    const SliceRoute& r = solution.slices[i];
    sf.push_back(std::max(0.0, slices[i].demand_bps - r.allocated_bps));
    sl.push_back(std::max(0.0, r.latency_s - slices[i].governing_pdb_s));
  }
  return EvaluateCost(sf, sl, weights);
}

std::string CsvRow::Key() const {
  return fmt::format("{},{},{},{}", condition, flows_per_ue, w_f, seed);
}

std::string CsvHeader() {
  return "condition,flows_per_ue,w_f,w_l,seed,sbar_f,sbar_l,J,J_flow_term,"
         "J_latency_term,solve_time_s,n_slices,n_binaries,status";
}

std::string FormatCsvRow(const CsvRow& r) {
  std::string status = r.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  return fmt::format("{},{},{},{},{},{:.9f},{:.9f},{:.12f},{:.12f},{:.12f},{:.3f},{},{},{}",
                     r.condition, r.flows_per_ue, r.w_f, r.w_l, r.seed, r.sbar_f,
                     r.sbar_l, r.J, r.J_flow_term, r.J_latency_term, r.solve_time_s,
                     r.n_slices, r.n_binaries, status);
}

CsvRow ParseCsvRow(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 14) {
    throw std::invalid_argument("CSV row has " + std::to_string(f.size()) +
                                " fields, expected 14: " + line);
  }
  try {
    CsvRow r;
    r.condition = std::stoi(f[0]);
    r.flows_per_ue = std::stoi(f[1]);
    r.w_f = std::stod(f[2]);
    r.w_l = std::stod(f[3]);
    r.seed = std::stoull(f[4]);
    r.sbar_f = std::stod(f[5]);
    r.sbar_l = std::stod(f[6]);
    r.J = std::stod(f[7]);
    r.J_flow_term = std::stod(f[8]);
    r.J_latency_term = std::stod(f[9]);
    r.solve_time_s = std::stod(f[10]);
    r.n_slices = std::stoi(f[11]);
    r.n_binaries = std::stoi(f[12]);
    r.status = f[13];
    return r;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed CSV row: " + line);
  }
}

std::string FlowDetailJson(const CsvRow& point, const TrafficOutcome& o,
                           const Flow5G& flow, int nqi) {
  nlohmann::ordered_json j;
  j["condition"] = point.condition;
  j["flows_per_ue"] = point.flows_per_ue;
  j["w_f"] = point.w_f;
  j["seed"] = point.seed;
  j["flow"] = flow.id;
  j["gnb"] = flow.gnb;
  j["ue"] = flow.ue;
  j["five_qi"] = flow.five_qi;
  j["nqi"] = nqi;
  j["destination"] = flow.destination;
  j["slice"] = o.slice_id;
  j["allocated_bps"] = o.allocated_bps;
  j["required_bps"] = o.required_bps;
  j["routed"] = o.routed;
  if (o.routed) {
    j["latency_s"] = o.latency_s;
  } else {
    j["latency_s"] = nullptr;
  }
  j["pdb_s"] = o.pdb_s;
  return j.dump();
}

}  // namespace ntnqos
