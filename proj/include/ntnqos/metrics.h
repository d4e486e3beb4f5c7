#ifndef NTNQOS_METRICS_H_
#define NTNQOS_METRICS_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnqos/constellation.h"
#include "ntnqos/milp.h"
#include "ntnqos/qos.h"
#include "ntnqos/slicing.h"

namespace ntnqos {

struct TrafficOutcome {
  int flow_id = 0;
  int slice_id = -1;
  double allocated_bps = 0;  // b*
  double latency_s = 0;      // l*, meaningful only when routed
  double required_bps = 0;   // r_f
  double pdb_s = 0;          // PDB of the flow's own 5QI
  bool routed = false;
};

class UncoveredFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits each slice's b_i over its NtnTraffic members in proportion to r_n,
// then over each member's flows in proportion to r_f. Latency is the slice
// latency, plus the gNB's user-link latency when `end_to_end` is set.
// Without an incumbent every flow gets b* = 0 and is unrouted. Outcomes
// follow `flows` order. Throws UncoveredFlowError if a flow is in no slice.
std::vector<TrafficOutcome> Redistribute(const Solution& solution,
                                         std::span<const Slice> slices,
                                         std::span<const NtnTraffic> traffic,
                                         std::span<const Flow5G> flows,
                                         const Topology& topology,
                                         bool end_to_end = false);

struct Satisfaction {
  double sbar_f = 0;
  // Averaged over routed flows only; NaN when none is routed.
  double sbar_l = 0;
  int num_flows = 0;
  int num_unrouted = 0;
};

// Throws std::invalid_argument for an empty outcome list.
Satisfaction ComputeSatisfaction(std::span<const TrafficOutcome> outcomes);

struct CostBreakdown {
  double total = 0;
  double flow_term = 0;
  double latency_term = 0;
};

// J from raw per-slice gaps (bits/s and seconds).
CostBreakdown EvaluateCost(std::span<const double> flow_gaps_bps,
                           std::span<const double> latency_gaps_s,
                           const OptimizationWeights& weights);

// Gaps recomputed from the solution as max(0, r_s - b) and max(0, l - PDB).
CostBreakdown EvaluateSolutionCost(const Solution& solution,
                                   std::span<const Slice> slices,
                                   const OptimizationWeights& weights);

struct CsvRow {
  int condition = 0;
  int flows_per_ue = 0;
  double w_f = 0;
  double w_l = 0;
  uint64_t seed = 0;
  double sbar_f = 0;
  double sbar_l = 0;
  double J = 0;
  double J_flow_term = 0;
  double J_latency_term = 0;
  double solve_time_s = 0;
  int n_slices = 0;
  int n_binaries = 0;
  std::string status;

  std::string Key() const;
};

std::string CsvHeader();
std::string FormatCsvRow(const CsvRow& row);
// Throws std::invalid_argument on a malformed line.
CsvRow ParseCsvRow(const std::string& line);

// One JSON object per flow, without a trailing newline.
std::string FlowDetailJson(const CsvRow& point, const TrafficOutcome& outcome,
                           const Flow5G& flow, int nqi);

}  // namespace ntnqos

#endif  // NTNQOS_METRICS_H_
