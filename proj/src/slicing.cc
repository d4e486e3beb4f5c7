#include "ntnqos/slicing.h"

#include <algorithm>
#include <limits>
#include <string>
#include <tuple>

namespace ntnqos {

SlicePolicy::SlicePolicy(NqiGroups default_groups)
    : default_groups_(std::move(default_groups)) {
  CheckDisjoint(default_groups_);
}

void SlicePolicy::SetSatelliteGroups(int satellite, NqiGroups groups) {
  CheckDisjoint(groups);
  overrides_[satellite] = std::move(groups);
}

void SlicePolicy::CheckDisjoint(const NqiGroups& groups) {
  std::set<int> seen;
  for (const auto& group : groups) {
    if (group.empty()) throw std::invalid_argument("empty NQI group");
    for (int nqi : group) {
      if (!seen.insert(nqi).second) {
        throw std::invalid_argument("NQI " + std::to_string(nqi) +
                                    " appears in more than one group");
      }
    }
  }
}

const NqiGroups* SlicePolicy::GroupsFor(int satellite) const {
  auto it = overrides_.find(satellite);
  if (it != overrides_.end()) return &it->second;
  if (!default_groups_.empty()) return &default_groups_;
  return nullptr;
}

std::optional<SlicePolicy::Group> SlicePolicy::GroupOf(int satellite,
                                                       int nqi) const {
  const NqiGroups* groups = GroupsFor(satellite);
  if (groups == nullptr) {
    // One group per NQI, ordered by ascending PDB.
    auto catalog = SimulationCatalog();
    for (int i = 0; i < static_cast<int>(catalog.size()); ++i) {
      if (catalog[i].value == nqi) return Group{i, {nqi}};
    }
    return std::nullopt;
  }
  for (int i = 0; i < static_cast<int>(groups->size()); ++i) {
    const auto& g = (*groups)[i];
    if (std::find(g.begin(), g.end(), nqi) != g.end()) {
      std::vector<int> members = g;
      std::sort(members.begin(), members.end());
      return Group{i, std::move(members)};
    }
  }
  return std::nullopt;
}

std::vector<int> AssignSliceEdges(const Topology& topology) {
  std::vector<int> edges;
  edges.reserve(topology.gnbs().size());
  for (int gnb : topology.gnbs()) {
    auto link = topology.UserLinkOf(gnb);
    if (!link) {
      throw NoVisibleSatelliteError(topology.node(gnb).kind_index);
    }
    edges.push_back(topology.link(*link).dst);
  }
  return edges;
}

std::set<int> SliceEdgeSet(std::span<const int> edges) {
  return {edges.begin(), edges.end()};
}

std::vector<Slice> BuildSlices(std::span<const NtnTraffic> traffic,
                               const SlicePolicy& policy,
                               std::span<const int> edges) {
  using Key = std::tuple<int, int, int>;  // edge satellite, group, dest
  std::map<Key, Slice> by_key;
  for (const NtnTraffic& t : traffic) {
    if (t.gnb < 0 || t.gnb >= static_cast<int>(edges.size())) {
      throw UnslicedTrafficError("NTN traffic " + std::to_string(t.id) +
                                 " comes from gNB " + std::to_string(t.gnb) +
                                 " without a slice-edge satellite");
    }
    const int edge = edges[t.gnb];
    auto group = policy.GroupOf(edge, t.nqi);
    if (!group) {
      throw UnslicedTrafficError(
          "NTN traffic " + std::to_string(t.id) + " has NQI " +
          std::to_string(t.nqi) + " which is in no group at satellite " +
          std::to_string(edge));
    }
    Slice& s = by_key[{edge, group->order, t.destination}];
    if (s.members.empty()) {
      s.edge_satellite = edge;
      s.nqi_group = group->members;
      s.destination = t.destination;
      s.governing_pdb_s = std::numeric_limits<double>::infinity();
      for (int nqi : s.nqi_group) {
        s.governing_pdb_s = std::min(s.governing_pdb_s, PdbSeconds(nqi));
      }
    }
    s.members.push_back(t.id);
    s.demand_bps += t.demand_bps;
  }

  std::vector<Slice> slices;
  for (auto& [key, s] : by_key) {
    if (!(s.demand_bps > 0)) continue;
    s.id = static_cast<int>(slices.size());
    slices.push_back(std::move(s));
  }
  return slices;
}

}  // namespace ntnqos
