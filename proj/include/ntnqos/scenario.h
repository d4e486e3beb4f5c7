#ifndef NTNQOS_SCENARIO_H_
#define NTNQOS_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnqos/constellation.h"
#include "ntnqos/metrics.h"
#include "ntnqos/milp.h"
#include "ntnqos/qos.h"
#include "ntnqos/slicing.h"

namespace ntnqos {

// Raised for schema violations; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WeightPair {
  double w_flow = 0.5;
  double w_latency = 0.5;
};

struct ScenarioConfig {
  std::string name;
  WalkerParams walker;
  TopologyOptions topology;
  std::vector<GeoPoint> ogs_sites;
  // Either explicit sites or `gnb_count` seeded uniform-on-sphere draws.
  std::vector<GeoPoint> gnb_sites;
  int gnb_count = 0;
  uint64_t gnb_placement_seed = 0;
  int ues_per_gnb = 5;
  std::vector<int> flows_per_ue;
  double demand_per_flow_bps = 1e6;
  std::vector<uint64_t> seeds;
  std::vector<int> conditions;
  // Mapping tables by condition id; 1 to 6 are always present.
  std::map<int, std::map<int, int>> mapping_tables;
  // gNB index -> condition id used for that gNB at every sweep point.
  std::map<int, int> gnb_mapping_overrides;
  SlicePolicy slice_policy;
  std::vector<WeightPair> weights;
  SolveOptions solver;
  bool end_to_end_latency = false;
  std::filesystem::path csv_path;
  std::filesystem::path flows_path;  // per-flow JSON lines; empty disables

  // Throws ConfigError naming the first offending field.
  void Validate() const;

  MappingCondition Condition(int id) const;

  // FNV-1a over every field that affects results; output paths excluded.
  uint64_t Hash() const;
  std::string HashHex() const;
};

// Parses a `schema = 1` TOML document. Unknown keys, missing required keys
// and out-of-range values raise ConfigError. The result is validated.
ScenarioConfig ParseScenario(const std::string& toml_text);
ScenarioConfig LoadScenario(const std::filesystem::path& path);

// Resolves seeded gNB placement: each draw is uniform on the sphere and is
// redrawn until some satellite is above the elevation mask.
std::vector<GeoPoint> ResolveGnbSites(const ScenarioConfig& config);

Topology BuildScenarioTopology(const ScenarioConfig& config);

struct SweepPoint {
  int condition = 0;
  int flows_per_ue = 0;
  WeightPair weights;
  uint64_t seed = 0;

  std::string Key() const;
};

// Cartesian product in condition, flows_per_ue, weights, seed order.
std::vector<SweepPoint> EnumeratePoints(const ScenarioConfig& config);

// "cond=5,flows=20,w=0.5[,seed=1]"; w is w_f and w_l = 1 - w_f. The seed
// defaults to the first configured seed.
SweepPoint ParsePoint(const std::string& text, const ScenarioConfig& config);

// Everything built for one point before solving.
struct PointInstance {
  std::vector<Flow5G> flows;
  std::vector<NtnTraffic> traffic;
  std::vector<Slice> slices;
  OptimizationWeights weights;
  int clipped_gnbs = 0;
};

PointInstance BuildPointInstance(const ScenarioConfig& config,
                                 const Topology& topology,
                                 const SweepPoint& point);

struct PointResult {
  SweepPoint point;
  PointInstance instance;
  CsvRow row;
  Solution solution;
  std::vector<TrafficOutcome> outcomes;
  std::vector<std::string> violations;
  double objective_mismatch = 0;  // |solver objective - recomputed J|
  std::string error;              // empty unless the pipeline threw
};

// Runs the full pipeline for one point. Solver and verifier failures are
// recorded in the result, never thrown.
PointResult RunPoint(const ScenarioConfig& config, const Topology& topology,
                     const SweepPoint& point);

struct SweepOptions {
  int workers = 1;
  bool resume = true;
  bool quiet = true;
};

struct RunRecord {
  std::string config_hash;
  std::vector<CsvRow> rows;  // in sweep order, including resumed rows
  std::filesystem::path csv_path;
  std::filesystem::path record_path;
  std::filesystem::path flows_path;
  int resumed = 0;
  int executed = 0;
};

// Runs every point not already present in the CSV and appends rows in sweep
// order through a single writer. A CSV written under a different config hash
// is refused with ConfigError.
RunRecord RunSweep(const ScenarioConfig& config, const SweepOptions& options);

}  // namespace ntnqos

#endif  // NTNQOS_SCENARIO_H_
