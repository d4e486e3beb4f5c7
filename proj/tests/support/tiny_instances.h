// Small hand-built topologies for solver tests.

#ifndef NTNQOS_TESTS_SUPPORT_TINY_INSTANCES_H_
#define NTNQOS_TESTS_SUPPORT_TINY_INSTANCES_H_

#include <random>
#include <vector>

#include "ntnqos/constellation.h"
#include "ntnqos/milp.h"
#include "ntnqos/slicing.h"

namespace ntnqos::testing {

struct TinyInstance {
  Topology topology;
  std::vector<Slice> slices;
  OptimizationWeights weights;
};

inline Slice MakeSlice(int id, int edge, int dest, double demand_bps,
                       double pdb_s) {
  Slice s;
  s.id = id;
  s.edge_satellite = edge;
  s.destination = dest;
  s.demand_bps = demand_bps;
  s.governing_pdb_s = pdb_s;
  s.nqi_group = {1};
  s.members = {id};
  return s;
}

inline OptimizationWeights NormalizedWeights(const std::vector<Slice>& slices,
                                             double w_flow) {
  OptimizationWeights w;
  w.w_flow = w_flow;
  w.w_latency = 1 - w_flow;
  w.flow_norm_bps = 0;
  w.latency_norm_s = 0;
  for (const Slice& s : slices) {
    w.flow_norm_bps += s.demand_bps;
    w.latency_norm_s += s.governing_pdb_s;
  }
  return w;
}

// Random instance with 2 to max_sats satellites, 1-2 ground stations and
// 1 to max_slices slices.
inline TinyInstance RandomTinyInstance(uint64_t seed, int max_sats = 4,
                                       int max_slices = 3) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  std::bernoulli_distribution coin(0.5);
  const double caps_mbps[] = {5, 10, 20, 50};
  const double pdbs_ms[] = {10, 20, 50};
  const double w_flow[] = {0.5, 0.3, 1.0, 0.0};

  TinyInstance inst;
  Topology& t = inst.topology;
  int num_sats = uniform_int(2, max_sats), num_gs = uniform_int(1, 2);
  std::vector<int> sats, gs;
  for (int k = 0; k < num_sats; ++k) {
    sats.push_back(t.AddNode(NodeKind::kSatellite, {7.0e6, 1.0e6 * k, 0}));
  }
  for (int k = 0; k < num_gs; ++k) {
    gs.push_back(t.AddNode(NodeKind::kGroundStation, {6.371e6, 1.0e6 * k, 0}));
  }
  auto add = [&](LinkKind kind, int a, int b) {
    double cap = caps_mbps[uniform_int(0, 3)] * 1e6;
    double lat = uniform_int(1, 15) * 1e-3;
    t.AddLink(kind, a, b, cap, lat);
  };
  for (int a : sats) {
    for (int b : sats) {
      if (a != b && coin(rng)) add(LinkKind::kInterSatellite, a, b);
    }
  }
  for (int a : sats) {
    for (int g : gs) {
      if (coin(rng)) add(LinkKind::kFeeder, a, g);
    }
  }
  int num_slices = uniform_int(1, max_slices);
  for (int i = 0; i < num_slices; ++i) {
    inst.slices.push_back(MakeSlice(i, sats[uniform_int(0, num_sats - 1)],
                                    gs[uniform_int(0, num_gs - 1)],
                                    uniform_int(2, 30) * 1e6,
                                    pdbs_ms[uniform_int(0, 2)] * 1e-3));
  }
  inst.weights = NormalizedWeights(inst.slices, w_flow[uniform_int(0, 3)]);
  return inst;
}

}  // namespace ntnqos::testing

#endif  // NTNQOS_TESTS_SUPPORT_TINY_INSTANCES_H_
