#include "ntnqos/milp.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "oracle/path_enumeration.h"
#include "support/tiny_instances.h"

namespace ntnqos {
namespace {

using testing::MakeSlice;
using testing::NormalizedWeights;

// Two satellites and one ground station: A -> B -> G.
struct Chain {
  Topology topo;
  int a, b, g, isl, feeder;
  Chain(double isl_bps = 10e9, double feeder_bps = 10e9) {
    a = topo.AddNode(NodeKind::kSatellite, {7e6, 0, 0});
    b = topo.AddNode(NodeKind::kSatellite, {7e6, 1e6, 0});
    g = topo.AddNode(NodeKind::kGroundStation, {6.371e6, 1e6, 0});
    isl = topo.AddLink(LinkKind::kInterSatellite, a, b, isl_bps, 0.004);
    feeder = topo.AddLink(LinkKind::kFeeder, b, g, feeder_bps, 0.003);
  }
};

TEST(BuildModel, ChainCountsVariables) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  const auto& vars = m.problem().variables();
  EXPECT_EQ(m.problem().num_integer(), 2);
  int flows = 0, b = 0, slack = 0;
  for (const MilpVariable& v : vars) {
    if (v.name.starts_with("f_")) ++flows;
    if (v.name.starts_with("b_")) ++b;
    if (v.name.starts_with("sf_") || v.name.starts_with("sl_")) ++slack;
  }
  EXPECT_EQ(flows, 2);
  EXPECT_EQ(b, 1);
  EXPECT_EQ(slack, 2);
  EXPECT_EQ(vars.size(), 7u);
  EXPECT_EQ(vars[m.XVar(0, c.isl)].name, "x_0_" + std::to_string(c.isl));
}

TEST(BuildModel, ObjectiveCoefficientsFollowWeights) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 4e6, 0.05),
                               MakeSlice(1, c.a, c.g, 6e6, 0.10)};
  OptimizationWeights w;
  w.flow_norm_bps = 10e6;
  w.latency_norm_s = 0.15;
  MilpModel m = BuildModel(slices, c.topo, w);
  const auto& v = m.slice_vars()[1];
  // 0.5 / (N_s F) per bit/s is 0.5 / (2 * 10) per Mbps.
  EXPECT_DOUBLE_EQ(m.problem().variables()[v.flow_gap].objective, 0.5 / 20.0);
  // 0.5 / (N_s L) per second is 0.5 / (2 * 150) per ms.
  EXPECT_DOUBLE_EQ(m.problem().variables()[v.latency_gap].objective, 0.5 / 300.0);

  w.w_flow = 0.3;
  w.w_latency = 0.7;
  MilpModel m2 = BuildModel(slices, c.topo, w);
  EXPECT_DOUBLE_EQ(m2.problem().variables()[v.flow_gap].objective, 0.3 / 20.0);
  EXPECT_DOUBLE_EQ(m2.problem().variables()[v.latency_gap].objective, 0.7 / 300.0);
}

TEST(BuildModel, RejectsBadInput) {
  Chain c;
  std::vector<Slice> none;
  OptimizationWeights w;
  EXPECT_THROW(BuildModel(none, c.topo, w), ModelError);
  std::vector<Slice> bad_edge = {MakeSlice(0, c.g, c.g, 1e6, 0.05)};
  EXPECT_THROW(BuildModel(bad_edge, c.topo, w), ModelError);
  std::vector<Slice> bad_dest = {MakeSlice(0, c.a, c.b, 1e6, 0.05)};
  EXPECT_THROW(BuildModel(bad_dest, c.topo, w), ModelError);
  std::vector<Slice> bad_id = {MakeSlice(0, 99, c.g, 1e6, 0.05)};
  EXPECT_THROW(BuildModel(bad_id, c.topo, w), ModelError);
  std::vector<Slice> ok = {MakeSlice(0, c.a, c.g, 1e6, 0.05)};
  w.w_flow = 0.6;
  EXPECT_THROW(BuildModel(ok, c.topo, w), std::invalid_argument);
}

TEST(BuildModel, RowsReferenceDeclaredVariables) {
  testing::TinyInstance inst = testing::RandomTinyInstance(7);
  MilpModel m = BuildModel(inst.slices, inst.topology, inst.weights);
  int n = static_cast<int>(m.problem().variables().size());
  for (const MilpRow& r : m.problem().rows()) {
    for (const auto& [col, coef] : r.terms) {
      EXPECT_GE(col, 0);
      EXPECT_LT(col, n);
    }
  }
}

TEST(Solve, SingleSliceOnChainGetsFullDemand) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  Solution s = Solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.slices[0].allocated_bps, 5e6, 1e-3);
  EXPECT_EQ(s.slices[0].route, (std::vector<int>{c.isl, c.feeder}));
  EXPECT_NEAR(s.slices[0].flow_gap_bps, 0, 1e-3);
  EXPECT_NEAR(s.slices[0].latency_s, 0.007, 1e-12);
  EXPECT_NEAR(s.objective, 0, 1e-12);
  EXPECT_TRUE(VerifySolution(slices, c.topo, s).empty());
}

TEST(Solve, SharedFeederSplitsCapacity) {
  Topology t;
  int a = t.AddNode(NodeKind::kSatellite, {7e6, 0, 0});
  int g = t.AddNode(NodeKind::kGroundStation, {6.371e6, 0, 0});
  t.AddLink(LinkKind::kFeeder, a, g, 10e6, 0.003);
  std::vector<Slice> slices = {MakeSlice(0, a, g, 8e6, 0.05),
                               MakeSlice(1, a, g, 8e6, 0.05)};
  MilpModel m = BuildModel(slices, t, NormalizedWeights(slices, 0.5));
  Solution s = Solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  double b = s.slices[0].allocated_bps + s.slices[1].allocated_bps;
  double gap = s.slices[0].flow_gap_bps + s.slices[1].flow_gap_bps;
  EXPECT_NEAR(b, 10e6, 1e-3);
  EXPECT_NEAR(gap, 6e6, 1e-3);
  // J = 0.5 / (2 * 16 Mbps) * 6 Mbps.
  EXPECT_NEAR(s.objective, 0.5 * 6.0 / 32.0, 1e-9);
  EXPECT_TRUE(VerifySolution(slices, t, s).empty());
}

TEST(Solve, NoLinksIsInfeasible) {
  Topology t;
  int a = t.AddNode(NodeKind::kSatellite, {7e6, 0, 0});
  int g = t.AddNode(NodeKind::kGroundStation, {6.371e6, 0, 0});
  std::vector<Slice> slices = {MakeSlice(0, a, g, 1e6, 0.05)};
  MilpModel m = BuildModel(slices, t, NormalizedWeights(slices, 0.5));
  Solution s = Solve(m);
  EXPECT_EQ(s.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(s.has_incumbent);
}

TEST(Solve, LatencyGapPicksShorterRoute) {
  // A reaches G directly (40 ms) or via B (5 + 5 ms); PDB 20 ms.
  Topology t;
  int a = t.AddNode(NodeKind::kSatellite, {7e6, 0, 0});
  int b = t.AddNode(NodeKind::kSatellite, {7e6, 1e6, 0});
  int g = t.AddNode(NodeKind::kGroundStation, {6.371e6, 0, 0});
  t.AddLink(LinkKind::kFeeder, a, g, 10e9, 0.040);
  int ab = t.AddLink(LinkKind::kInterSatellite, a, b, 10e9, 0.005);
  int bg = t.AddLink(LinkKind::kFeeder, b, g, 10e9, 0.005);
  std::vector<Slice> slices = {MakeSlice(0, a, g, 1e6, 0.020)};
  MilpModel m = BuildModel(slices, t, NormalizedWeights(slices, 0.5));
  Solution s = Solve(m);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_EQ(s.slices[0].route, (std::vector<int>{ab, bg}));
  EXPECT_NEAR(s.slices[0].latency_gap_s, 0, 1e-12);
}

TEST(Solve, MatchesPathEnumerationOracle) {
  int compared = 0;
  for (uint64_t seed = 1; seed <= 120; ++seed) {
    testing::TinyInstance inst = testing::RandomTinyInstance(seed);
    oracle::EnumerationResult expected = oracle::SolveByEnumeration(
        inst.topology, inst.slices, inst.weights);
    MilpModel m = BuildModel(inst.slices, inst.topology, inst.weights);
    Solution got = Solve(m);
    if (!expected.feasible) {
      EXPECT_EQ(got.status, SolveStatus::kInfeasible) << "seed " << seed;
      continue;
    }
    ASSERT_EQ(got.status, SolveStatus::kOptimal) << "seed " << seed;
    EXPECT_NEAR(got.objective, expected.objective, 1e-6) << "seed " << seed;
    std::vector<std::string> errors =
        VerifySolution(inst.slices, inst.topology, got);
    EXPECT_TRUE(errors.empty()) << "seed " << seed << ": " << (errors.empty() ? "" : errors.front());
    ++compared;
  }
  EXPECT_GE(compared, 50);
}

TEST(Solve, SlacksAreTight) {
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    testing::TinyInstance inst = testing::RandomTinyInstance(seed);
    if (inst.weights.w_flow == 0 || inst.weights.w_latency == 0) continue;
    MilpModel m = BuildModel(inst.slices, inst.topology, inst.weights);
    Solution s = Solve(m);
    if (s.status != SolveStatus::kOptimal) continue;
    for (size_t i = 0; i < inst.slices.size(); ++i) {
      const SliceRoute& r = s.slices[i];
      double want_f = std::max(0.0, inst.slices[i].demand_bps - r.allocated_bps);
      double want_l = std::max(0.0, r.latency_s - inst.slices[i].governing_pdb_s);
      EXPECT_NEAR(r.flow_gap_bps / kModelFlowUnitBps, want_f / kModelFlowUnitBps, 1e-9);
      EXPECT_NEAR(r.latency_gap_s / kModelTimeUnitS, want_l / kModelTimeUnitS, 1e-9);
    }
  }
}

TEST(Solve, IsDeterministic) {
  testing::TinyInstance inst = testing::RandomTinyInstance(11);
  MilpModel m = BuildModel(inst.slices, inst.topology, inst.weights);
  Solution s1 = Solve(m);
  Solution s2 = Solve(m);
  EXPECT_EQ(s1.values, s2.values);
  EXPECT_EQ(s1.nodes, s2.nodes);
}

TEST(Solve, RejectsBadOptions) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  SolveOptions o;
  o.time_limit_s = 0;
  EXPECT_THROW(Solve(m, o), std::invalid_argument);
}

// min -x0 - x1 s.t. x0 + x1 <= 1.5, binaries: relaxation -1.5, optimum -1.
MilpProblem HalfKnapsack() {
  MilpProblem p;
  int x0 = p.AddVariable({"x0", 0, 1, -1, true});
  int x1 = p.AddVariable({"x1", 0, 1, -1, true});
  p.AddRow({"cap", -lp::kInf, 1.5, {{x0, 1.0}, {x1, 1.0}}});
  return p;
}

TEST(SolveMilp, HeuristicSeesRootPointAndFeedsIncumbent) {
  MilpProblem p = HalfKnapsack();
  int calls = 0;
  IncumbentHeuristic h = [&calls](std::span<const double> x) {
    ++calls;
    EXPECT_NEAR(x[0] + x[1], 1.5, 1e-9);
    return std::vector<std::vector<double>>{{1.0, 0.0}};
  };
  MipResult r = SolveMilp(p, SolveOptions{}, {}, h);
  EXPECT_EQ(calls, 1);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(SolveMilp, InfeasibleHeuristicCandidateIsIgnored) {
  MilpProblem p = HalfKnapsack();
  IncumbentHeuristic h = [](std::span<const double>) {
    return std::vector<std::vector<double>>{{1.0, 1.0}};
  };
  MipResult with = SolveMilp(p, SolveOptions{}, {}, h);
  MipResult without = SolveMilp(p, SolveOptions{});
  ASSERT_EQ(with.status, SolveStatus::kOptimal);
  EXPECT_NEAR(with.objective, without.objective, 1e-12);
  EXPECT_LE(with.values[0] + with.values[1], 1.5 + 1e-9);
}

TEST(Verify, FlagsTamperedSolutions) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  Solution s = Solve(m);
  ASSERT_TRUE(VerifySolution(slices, c.topo, s).empty());

  Solution over = s;
  over.slices[0].allocated_bps = 6e6;
  EXPECT_FALSE(VerifySolution(slices, c.topo, over).empty());

  Solution broken = s;
  broken.slices[0].link_flows_bps.pop_back();
  EXPECT_FALSE(VerifySolution(slices, c.topo, broken).empty());

  Solution slow = s;
  slow.slices[0].latency_s = 0.001;
  EXPECT_FALSE(VerifySolution(slices, c.topo, slow).empty());
}

TEST(Mps, MarksBinariesAndNamesColumns) {
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  std::string text = ToMps(m.problem());
  EXPECT_NE(text.find("OBJSENSE\n    MIN"), std::string::npos);
  size_t begin = text.find("'INTORG'");
  size_t end = text.find("'INTEND'");
  ASSERT_NE(begin, std::string::npos);
  ASSERT_NE(end, std::string::npos);
  std::string block = text.substr(begin, end - begin);
  EXPECT_NE(block.find("x_0_" + std::to_string(c.isl)), std::string::npos);
  EXPECT_NE(block.find("x_0_" + std::to_string(c.feeder)), std::string::npos);
  EXPECT_EQ(block.find("f_0_"), std::string::npos);
  for (const char* name : {"b_0", "sf_0", "sl_0", "f_0_0"}) {
    EXPECT_NE(text.find(name), std::string::npos) << name;
  }
  EXPECT_EQ(text.substr(text.size() - 7), "ENDATA\n");
}

TEST(Mps, EmptyModelAndBadPathFail) {
  EXPECT_THROW(ToMps(MilpProblem{}), ModelError);
  Chain c;
  std::vector<Slice> slices = {MakeSlice(0, c.a, c.g, 5e6, 0.05)};
  MilpModel m = BuildModel(slices, c.topo, NormalizedWeights(slices, 0.5));
  EXPECT_THROW(ExportMps(m.problem(), "/nonexistent-dir/model.mps"),
               std::runtime_error);
  auto path = std::filesystem::temp_directory_path() / "ntnqos_chain.mps";
  ExportMps(m.problem(), path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_TRUE(first.starts_with("NAME"));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ntnqos
