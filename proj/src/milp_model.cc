#include <cmath>
#include <fmt/format.h>
#include <map>

#include "ntnqos/milp.h"

namespace ntnqos {

void OptimizationWeights::Validate() const {
  if (!(w_flow >= 0) || !(w_latency >= 0) ||
      std::abs(w_flow + w_latency - 1.0) > 1e-9) {
    throw std::invalid_argument(
        fmt::format("weights must be non-negative and sum to 1, got ({}, {})",
                    w_flow, w_latency));
  }
  if (!(flow_norm_bps > 0) || !std::isfinite(flow_norm_bps)) {
    throw std::invalid_argument("flow normalizer F must be positive");
  }
  if (!(latency_norm_s > 0) || !std::isfinite(latency_norm_s)) {
    throw std::invalid_argument("latency normalizer L must be positive");
  }
}

int MilpProblem::AddVariable(MilpVariable v) {
  if (v.lower > v.upper) {
    throw std::invalid_argument("variable " + v.name + " has empty bounds");
  }
  variables_.push_back(std::move(v));
  return static_cast<int>(variables_.size()) - 1;
}

int MilpProblem::AddRow(MilpRow row) {
  for (const auto& [col, coef] : row.terms) {
    if (col < 0 || col >= static_cast<int>(variables_.size())) {
      throw std::out_of_range("row " + row.name +
                              " references an undeclared variable");
    }
  }
  rows_.push_back(std::move(row));
  return static_cast<int>(rows_.size()) - 1;
}

int MilpProblem::num_integer() const {
  int n = 0;
  for (const MilpVariable& v : variables_) n += v.integer ? 1 : 0;
  return n;
}

lp::Problem MilpProblem::ToLp() const {
  std::vector<std::vector<std::pair<int, double>>> by_col(variables_.size());
  lp::Problem p;
  for (size_t r = 0; r < rows_.size(); ++r) {
    p.AddRow(rows_[r].lower, rows_[r].upper);
    for (const auto& [col, coef] : rows_[r].terms) {
      by_col[col].emplace_back(static_cast<int>(r), coef);
    }
  }
  for (size_t j = 0; j < variables_.size(); ++j) {
    const MilpVariable& v = variables_[j];
    p.AddColumn(v.objective, v.lower, v.upper, by_col[j]);
  }
  return p;
}

double MilpProblem::Objective(std::span<const double> values) const {
  double obj = 0;
  for (size_t j = 0; j < variables_.size(); ++j) {
    obj += variables_[j].objective * values[j];
  }
  return obj;
}

int MilpModel::XVar(int slice, int link) const {
  const SliceVariables& v = vars_.at(slice);
  for (size_t k = 0; k < v.links.size(); ++k) {
    if (v.links[k] == link) return v.x[k];
  }
  return -1;
}

int MilpModel::FVar(int slice, int link) const {
  const SliceVariables& v = vars_.at(slice);
  for (size_t k = 0; k < v.links.size(); ++k) {
    if (v.links[k] == link) return v.f[k];
  }
  return -1;
}

double MilpModel::flow_gap_coefficient() const {
  double f = weights_.flow_norm_bps / kModelFlowUnitBps;
  return weights_.w_flow / (static_cast<double>(slices_.size()) * f);
}

double MilpModel::latency_gap_coefficient() const {
  double l = weights_.latency_norm_s / kModelTimeUnitS;
  return weights_.w_latency / (static_cast<double>(slices_.size()) * l);
}

MilpModel BuildModel(std::span<const Slice> slices, const Topology& topology,
                     const OptimizationWeights& weights) {
  weights.Validate();
  if (slices.empty()) throw ModelError("model needs at least one slice");
  for (const Slice& s : slices) {
    if (!topology.IsSatellite(s.edge_satellite)) {
      throw ModelError(fmt::format("slice {}: edge satellite {} not in topology",
                                   s.id, s.edge_satellite));
    }
    if (!topology.IsGroundStation(s.destination)) {
      throw ModelError(fmt::format("slice {}: destination {} not in topology",
                                   s.id, s.destination));
    }
    if (!(s.demand_bps > 0)) {
      throw ModelError(fmt::format("slice {} has no demand", s.id));
    }
  }

  MilpModel model;
  model.slices_.assign(slices.begin(), slices.end());
  model.topology_ = &topology;
  model.weights_ = weights;
  MilpProblem& prob = model.problem_;
  const double cf = model.flow_gap_coefficient();
  const double cl = model.latency_gap_coefficient();

  std::vector<int> isls = topology.LinksOfKind(LinkKind::kInterSatellite);
  std::vector<int> feeders = topology.LinksOfKind(LinkKind::kFeeder);
  // Per-link column lists of f across slices, for the capacity rows.
  std::map<int, std::vector<int>> flow_cols;

  for (size_t i = 0; i < slices.size(); ++i) {
    const Slice& s = slices[i];
    SliceVariables v;
    for (int e : isls) v.links.push_back(e);
    for (int e : feeders) {
      if (topology.link(e).dst == s.destination) v.links.push_back(e);
    }
    const double demand = s.demand_bps / kModelFlowUnitBps;
    const double pdb = s.governing_pdb_s / kModelTimeUnitS;

    v.b = prob.AddVariable({fmt::format("b_{}", i), 0, demand, 0, false});
    v.flow_gap = prob.AddVariable({fmt::format("sf_{}", i), 0, lp::kInf, cf, false});
    v.latency_gap =
        prob.AddVariable({fmt::format("sl_{}", i), 0, lp::kInf, cl, false});
    for (int e : v.links) {
      v.x.push_back(prob.AddVariable({fmt::format("x_{}_{}", i, e), 0, 1, 0, true}));
    }
    for (int e : v.links) {
      int col = prob.AddVariable({fmt::format("f_{}_{}", i, e), 0, lp::kInf, 0, false});
      v.f.push_back(col);
      flow_cols[e].push_back(col);
    }

    // Per-node incidence of this slice's link columns.
    std::map<int, std::vector<size_t>> out_of, into;
    for (size_t k = 0; k < v.links.size(); ++k) {
      const Link& l = topology.link(v.links[k]);
      out_of[l.src].push_back(k);
      into[l.dst].push_back(k);
    }

    MilpRow eq2{fmt::format("eq2_{}", i), 0, 0, {{v.b, 1.0}}};
    for (size_t k : out_of[s.edge_satellite]) eq2.terms.emplace_back(v.f[k], -1.0);
    prob.AddRow(std::move(eq2));

    for (size_t k = 0; k < v.links.size(); ++k) {
      double cap = topology.link(v.links[k]).capacity_bps / kModelFlowUnitBps;
      prob.AddRow({fmt::format("act_{}_{}", i, v.links[k]), -lp::kInf, 0,
                   {{v.f[k], 1.0}, {v.x[k], -cap}}});
    }

    for (int n : topology.satellites()) {
      const bool edge = n == s.edge_satellite;
      MilpRow cons{fmt::format("cons_{}_{}", i, n), 0, 0, {}};
      for (size_t k : into[n]) cons.terms.emplace_back(v.f[k], 1.0);
      for (size_t k : out_of[n]) cons.terms.emplace_back(v.f[k], -1.0);
      if (edge) cons.terms.emplace_back(v.b, 1.0);
      if (!cons.terms.empty()) prob.AddRow(std::move(cons));

      // Kept even when empty so that a satellite without links makes the
      // route-existence requirement infeasible.
      double rhs = edge ? 1.0 : 0.0;
      MilpRow deg{fmt::format("deg_{}_{}", i, n), rhs, rhs, {}};
      for (size_t k : out_of[n]) deg.terms.emplace_back(v.x[k], 1.0);
      for (size_t k : into[n]) deg.terms.emplace_back(v.x[k], -1.0);
      if (edge || !deg.terms.empty()) prob.AddRow(std::move(deg));

      MilpRow isl_in{fmt::format("islin_{}_{}", i, n), -lp::kInf, 1, {}};
      for (size_t k : into[n]) {
        if (topology.link(v.links[k]).kind == LinkKind::kInterSatellite) {
          isl_in.terms.emplace_back(v.x[k], 1.0);
        }
      }
      if (isl_in.terms.size() > 1) prob.AddRow(std::move(isl_in));
      MilpRow isl_out{fmt::format("islout_{}_{}", i, n), -lp::kInf, 1, {}};
      for (size_t k : out_of[n]) {
        if (topology.link(v.links[k]).kind == LinkKind::kInterSatellite) {
          isl_out.terms.emplace_back(v.x[k], 1.0);
        }
      }
      if (isl_out.terms.size() > 1) prob.AddRow(std::move(isl_out));
    }

    MilpRow dest{fmt::format("dest_{}", i), 0, 0, {{v.b, -1.0}}};
    MilpRow feed{fmt::format("feed_{}", i), -lp::kInf, 1, {}};
    for (size_t k : into[s.destination]) {
      dest.terms.emplace_back(v.f[k], 1.0);
      feed.terms.emplace_back(v.x[k], 1.0);
    }
    prob.AddRow(std::move(dest));
    if (feed.terms.size() > 1) prob.AddRow(std::move(feed));

    prob.AddRow({fmt::format("gapf_{}", i), demand, lp::kInf,
                 {{v.flow_gap, 1.0}, {v.b, 1.0}}});
    MilpRow gapl{fmt::format("gapl_{}", i), -pdb, lp::kInf, {{v.latency_gap, 1.0}}};
    for (size_t k = 0; k < v.links.size(); ++k) {
      double lat = topology.link(v.links[k]).latency_s / kModelTimeUnitS;
      gapl.terms.emplace_back(v.x[k], -lat);
    }
    prob.AddRow(std::move(gapl));

    model.vars_.push_back(std::move(v));
  }

  for (const auto& [e, cols] : flow_cols) {
    MilpRow cap{fmt::format("cap_{}", e), -lp::kInf,
                topology.link(e).capacity_bps / kModelFlowUnitBps, {}};
    for (int col : cols) cap.terms.emplace_back(col, 1.0);
    prob.AddRow(std::move(cap));
  }
  return model;
}

}  // namespace ntnqos
