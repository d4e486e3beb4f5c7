#ifndef NTNQOS_SLICING_H_
#define NTNQOS_SLICING_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "ntnqos/constellation.h"
#include "ntnqos/qos.h"

namespace ntnqos {

using NqiGroups = std::vector<std::vector<int>>;

// Per slice-edge satellite partition of NQIs into groups. Satellites without
// an override use the default partition, or one group per NQI when the
// default is empty.
class SlicePolicy {
 public:
  SlicePolicy() = default;
  explicit SlicePolicy(NqiGroups default_groups);

  // Throws std::invalid_argument when groups overlap.
  void SetSatelliteGroups(int satellite, NqiGroups groups);

  struct Group {
    int order = 0;  // position used to order slices at one satellite
    std::vector<int> members;
  };

  // The group holding `nqi` at `satellite`, or nullopt.
  std::optional<Group> GroupOf(int satellite, int nqi) const;

  const NqiGroups& default_groups() const { return default_groups_; }
  const std::map<int, NqiGroups>& overrides() const { return overrides_; }

 private:
  static void CheckDisjoint(const NqiGroups& groups);
  const NqiGroups* GroupsFor(int satellite) const;

  NqiGroups default_groups_;
  std::map<int, NqiGroups> overrides_;
};

struct Slice {
  int id = 0;
  int edge_satellite = 0;  // node id
  std::vector<int> nqi_group;
  double governing_pdb_s = 0;
  int destination = 0;  // ground-station node id
  std::vector<int> members;  // NtnTraffic ids
  double demand_bps = 0;
};

class UnslicedTrafficError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Slice-edge satellite per gNB index: the ingress of the gNB's user link.
std::vector<int> AssignSliceEdges(const Topology& topology);

// The distinct slice-edge satellites, ascending.
std::set<int> SliceEdgeSet(std::span<const int> edges);

// One slice per (edge satellite, NQI group, destination) with members.
// Slices are ordered by edge satellite, then group, then destination, and
// zero-demand slices are dropped.
std::vector<Slice> BuildSlices(std::span<const NtnTraffic> traffic,
                               const SlicePolicy& policy,
                               std::span<const int> edges);

}  // namespace ntnqos

#endif  // NTNQOS_SLICING_H_
