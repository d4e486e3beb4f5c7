#include "ntnqos/scenario.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ntnqos {
namespace {

namespace fs = std::filesystem;

// 4 x 6 polar shell, two ground stations, three seeded gNBs, Condition 2
// only: 18 or fewer slices, well under a second per point.
std::string TinyToml(const std::string& csv, const std::string& extra = "") {
  return R"(schema = 1
name = "tiny"

[constellation]
planes = 4
sats_per_plane = 6
altitude_km = 1000
inclination_deg = 90
epoch_s = 1440

[[ground_stations]]
name = "Tokyo"
lat_deg = 35.71
lon_deg = 139.49

[[ground_stations]]
lat_deg = 42.45
lon_deg = -117.62

[gnbs]
count = 3
placement_seed = 7

[traffic]
ues_per_gnb = 2
flows_per_ue = [1, 2]
seeds = [1]

[mapping]
conditions = [2]

[optimization]
weights = [[0.5, 0.5]]
time_limit_s = 60
)" + extra + "\n[output]\ncsv = \"" + csv + "\"\n";
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("ntnqos_scenario_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string ConfigErrorOf(const std::string& text) {
  try {
    ParseScenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseScenario, ReadsFieldsAndUnits) {
  ScenarioConfig c = ParseScenario(TinyToml("out.csv"));
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.walker.num_planes, 4);
  EXPECT_EQ(c.walker.sats_per_plane, 6);
  EXPECT_DOUBLE_EQ(c.walker.altitude_m, 1e6);
  ASSERT_EQ(c.ogs_sites.size(), 2u);
  EXPECT_DOUBLE_EQ(c.ogs_sites[0].latitude_deg, 35.71);
  EXPECT_EQ(c.gnb_count, 3);
  EXPECT_EQ(c.flows_per_ue, (std::vector<int>{1, 2}));
  EXPECT_DOUBLE_EQ(c.demand_per_flow_bps, 1e6);
  EXPECT_DOUBLE_EQ(c.topology.capacities.user_bps, 500e6);
  EXPECT_DOUBLE_EQ(c.topology.capacities.isl_bps, 10e9);
  EXPECT_DOUBLE_EQ(c.solver.time_limit_s, 60);
  EXPECT_DOUBLE_EQ(c.solver.abs_gap, 1e-6);
  EXPECT_EQ(c.mapping_tables.size(), 6u);
  EXPECT_EQ(c.csv_path, fs::path("out.csv"));
}

TEST(ParseScenario, CustomMappingAndOverrides) {
  std::string text = TinyToml("o.csv");
  text.replace(text.find("conditions = [2]"), 16,
               "conditions = [2, 7]\n"
               "custom = [{ id = 7, pairs = [[80, 80], [3, 80], [65, 80], [1, 80], [2, 80], "
               "[70, 80], [4, 80]] }]\n"
               "gnb_overrides = [{ gnb = 1, condition = 5 }]");
  ScenarioConfig c = ParseScenario(text);
  EXPECT_EQ(c.conditions, (std::vector<int>{2, 7}));
  EXPECT_EQ(c.Condition(7).Map(4), 80);
  EXPECT_EQ(c.gnb_mapping_overrides.at(1), 5);
}

TEST(ParseScenario, RejectsUnknownKeysWithTheirPath) {
  std::string text = TinyToml("o.csv");
  text.replace(text.find("planes = 4"), 10, "planes = 4\nplane = 4");
  EXPECT_NE(ConfigErrorOf(text).find("constellation.plane"), std::string::npos);
  EXPECT_NE(ConfigErrorOf(TinyToml("o.csv") + "\n[extra]\nx = 1\n").find("extra"),
            std::string::npos);
}

TEST(ParseScenario, WeightsMustSumToOne) {
  std::string text = TinyToml("o.csv");
  text.replace(text.find("[[0.5, 0.5]]"), 12, "[[0.5, 0.5], [0.4, 0.5]]");
  std::string msg = ConfigErrorOf(text);
  EXPECT_NE(msg.find("optimization.weights[1]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("must equal 1"), std::string::npos) << msg;
}

TEST(ParseScenario, RejectsSchemaAndMissingSections) {
  std::string text = TinyToml("o.csv");
  EXPECT_NE(ConfigErrorOf(text.substr(text.find('\n') + 1)).find("schema"), std::string::npos);
  std::string v2 = text;
  v2.replace(0, 10, "schema = 2");
  EXPECT_NE(ConfigErrorOf(v2).find("schema"), std::string::npos);
  std::string no_out = text.substr(0, text.find("[output]"));
  EXPECT_NE(ConfigErrorOf(no_out).find("output"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("schema = 1\n[traffic\n").find("syntax"), std::string::npos);
  std::string bad_cond = text;
  bad_cond.replace(bad_cond.find("conditions = [2]"), 16, "conditions = [9]");
  EXPECT_NE(ConfigErrorOf(bad_cond).find("condition 9"), std::string::npos);
}

TEST(ParseScenario, ShippedScenariosLoad) {
  for (const char* name : {"paper_small.toml", "paper_full.toml"}) {
    fs::path p = fs::path(NTNQOS_SOURCE_DIR) / "scenarios" / name;
    ScenarioConfig c = LoadScenario(p);
    EXPECT_EQ(c.conditions.size(), 6u) << name;
    EXPECT_EQ(c.weights.size(), 2u) << name;
  }
  EXPECT_THROW(LoadScenario("/nonexistent/scenario.toml"), std::ios_base::failure);
}

TEST(ScenarioConfig, HashTracksResultsNotOutputs) {
  ScenarioConfig a = ParseScenario(TinyToml("a.csv"));
  ScenarioConfig b = ParseScenario(TinyToml("elsewhere/b.csv"));
  EXPECT_EQ(a.Hash(), b.Hash());
  EXPECT_EQ(a.HashHex().size(), 16u);
  ScenarioConfig c = a;
  c.topology.capacities.isl_bps = 5e9;
  EXPECT_NE(a.Hash(), c.Hash());
  ScenarioConfig d = a;
  d.seeds = {2};
  EXPECT_NE(a.Hash(), d.Hash());
  ScenarioConfig e = a;
  e.weights[0] = {0.3, 0.7};
  EXPECT_NE(a.Hash(), e.Hash());
}

TEST(Sweep, PointsFollowConditionFlowsWeightsSeedOrder) {
  ScenarioConfig c = ParseScenario(TinyToml("o.csv"));
  c.conditions = {1, 2};
  c.weights = {{0.5, 0.5}, {0.3, 0.7}};
  c.seeds = {1, 2};
  std::vector<SweepPoint> pts = EnumeratePoints(c);
  ASSERT_EQ(pts.size(), 16u);
  EXPECT_EQ(pts[0].Key(), "1,1,0.5,1");
  EXPECT_EQ(pts[1].Key(), "1,1,0.5,2");
  EXPECT_EQ(pts[2].Key(), "1,1,0.3,1");
  EXPECT_EQ(pts[4].Key(), "1,2,0.5,1");
  EXPECT_EQ(pts[8].Key(), "2,1,0.5,1");
}

TEST(Sweep, ParsePointAcceptsAndRejects) {
  ScenarioConfig c = ParseScenario(TinyToml("o.csv"));
  SweepPoint p = ParsePoint("cond=5,flows=20,w=0.3", c);
  EXPECT_EQ(p.condition, 5);
  EXPECT_EQ(p.flows_per_ue, 20);
  EXPECT_DOUBLE_EQ(p.weights.w_flow, 0.3);
  EXPECT_DOUBLE_EQ(p.weights.w_latency, 0.7);
  EXPECT_EQ(p.seed, 1u);
  EXPECT_EQ(ParsePoint("cond=1,flows=2,w=1,seed=9", c).seed, 9u);
  for (const char* bad : {"cond=5,flows=20", "cond=x,flows=2,w=0.5", "cond=8,flows=2,w=0.5",
                          "cond=1,flows=0,w=0.5", "cond=1,flows=2,w=1.5", "cond=1,flows=2,w=0.5,k=1",
                          "cond=1;flows=2"}) {
    EXPECT_THROW(ParsePoint(bad, c), ConfigError) << bad;
  }
}

TEST(Scenario, SeededGnbPlacementIsVisibleAndRepeatable) {
  ScenarioConfig c = ParseScenario(TinyToml("o.csv"));
  std::vector<GeoPoint> a = ResolveGnbSites(c);
  std::vector<GeoPoint> b = ResolveGnbSites(c);
  ASSERT_EQ(a.size(), 3u);
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].latitude_deg, b[k].latitude_deg);
    EXPECT_EQ(a[k].longitude_deg, b[k].longitude_deg);
  }
  Topology t = BuildScenarioTopology(c);
  EXPECT_EQ(t.gnbs().size(), 3u);
  for (int g : t.gnbs()) EXPECT_TRUE(t.UserLinkOf(g).has_value());
  c.gnb_placement_seed = 8;
  EXPECT_NE(ResolveGnbSites(c)[0].latitude_deg, a[0].latitude_deg);
}

TEST(Scenario, PointInstanceNormalizersAndCoverage) {
  ScenarioConfig c = ParseScenario(TinyToml("o.csv"));
  Topology t = BuildScenarioTopology(c);
  PointInstance inst = BuildPointInstance(c, t, ParsePoint("cond=2,flows=2,w=0.5", c));
  ASSERT_EQ(inst.flows.size(), 12u);
  EXPECT_DOUBLE_EQ(inst.weights.flow_norm_bps, 12e6);
  double pdb = 0;
  for (const Flow5G& f : inst.flows) pdb += PdbSeconds(f.five_qi);
  EXPECT_DOUBLE_EQ(inst.weights.latency_norm_s, pdb);
  size_t members = 0;
  for (const Slice& s : inst.slices) members += s.members.size();
  EXPECT_EQ(members, inst.traffic.size());
  EXPECT_EQ(inst.clipped_gnbs, 0);
}

TEST(Scenario, RunPointIsOptimalVerifiedAndConsistent) {
  ScenarioConfig c = ParseScenario(TinyToml("o.csv"));
  Topology t = BuildScenarioTopology(c);
  PointResult r = RunPoint(c, t, ParsePoint("cond=2,flows=2,w=0.5", c));
  EXPECT_TRUE(r.error.empty()) << r.error;
  EXPECT_EQ(r.row.status, "Optimal");
  EXPECT_TRUE(r.violations.empty());
  EXPECT_LE(r.objective_mismatch, 1e-6);
  EXPECT_EQ(r.outcomes.size(), 12u);
  EXPECT_GT(r.row.n_binaries, 0);
  EXPECT_NEAR(r.row.J, r.row.J_flow_term + r.row.J_latency_term, 1e-15);
  // Each normalized term stays within its weight on a realistic shell.
  EXPECT_GE(r.row.J_flow_term, 0.0);
  EXPECT_LE(r.row.J_flow_term, r.row.w_f);
  EXPECT_GE(r.row.J_latency_term, 0.0);
  EXPECT_LE(r.row.J_latency_term, r.row.w_l);
}

TEST(Sweep, WritesOneRowPerPointAndResumes) {
  TempDir dir;
  ScenarioConfig c = ParseScenario(TinyToml((dir / "out/r.csv").string()));
  c.flows_path = dir / "out/flows.jsonl";
  RunRecord first = RunSweep(c, {});
  ASSERT_EQ(first.rows.size(), 2u);
  EXPECT_EQ(first.executed, 2);
  EXPECT_EQ(first.rows[0].flows_per_ue, 1);
  EXPECT_EQ(first.rows[1].flows_per_ue, 2);
  EXPECT_TRUE(fs::exists(first.record_path));
  const std::string csv = Slurp(c.csv_path);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), CsvHeader());
  std::string flows = Slurp(c.flows_path);
  EXPECT_EQ(std::count(flows.begin(), flows.end(), '\n'), 6 + 12);

  RunRecord again = RunSweep(c, {});
  EXPECT_EQ(again.executed, 0);
  EXPECT_EQ(again.resumed, 2);
  EXPECT_EQ(Slurp(c.csv_path), csv);
  EXPECT_EQ(Slurp(c.flows_path), flows);
}

TEST(Sweep, TornLastLineIsRecomputed) {
  TempDir dir;
  ScenarioConfig c = ParseScenario(TinyToml((dir / "r.csv").string()));
  RunSweep(c, {});
  std::string csv = Slurp(c.csv_path);
  {
    std::ofstream out(c.csv_path, std::ios::trunc);
    out << csv.substr(0, csv.size() - 20);
  }
  RunRecord r = RunSweep(c, {});
  EXPECT_EQ(r.resumed, 1);
  EXPECT_EQ(r.executed, 1);
  EXPECT_EQ(r.rows.size(), 2u);
}

TEST(Sweep, RefusesCsvFromAnotherConfig) {
  TempDir dir;
  ScenarioConfig c = ParseScenario(TinyToml((dir / "r.csv").string()));
  c.flows_per_ue = {1};
  RunSweep(c, {});
  ScenarioConfig other = c;
  other.topology.capacities.feeder_bps = 1e9;
  EXPECT_THROW(RunSweep(other, {}), ConfigError);
  SweepOptions fresh;
  fresh.resume = false;
  EXPECT_EQ(RunSweep(other, fresh).executed, 1);
}

TEST(Sweep, RerunsMatchExceptTiming) {
  TempDir dir;
  ScenarioConfig c = ParseScenario(TinyToml((dir / "a.csv").string()));
  SweepOptions opts;
  opts.workers = 2;
  RunRecord a = RunSweep(c, opts);
  c.csv_path = dir / "b.csv";
  RunRecord b = RunSweep(c, {});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (size_t k = 0; k < a.rows.size(); ++k) {
    CsvRow x = a.rows[k], y = b.rows[k];
    x.solve_time_s = y.solve_time_s = 0;
    EXPECT_EQ(FormatCsvRow(x), FormatCsvRow(y));
  }
}

}  // namespace
}  // namespace ntnqos
