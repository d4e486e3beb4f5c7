#ifndef NTNQOS_QOS_H_
#define NTNQOS_QOS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ntnqos {

enum class ResourceType { kGbr, kNonGbr };

// A QoS identifier (5QI or NQI; both draw from the same catalog) and its
// packet delay budget.
struct QosClass {
  int value = 0;
  double pdb_s = 0;
  ResourceType resource = ResourceType::kNonGbr;
};

// The seven identifiers used in simulation, sorted by ascending PDB.
std::span<const QosClass> SimulationCatalog();

// Throws std::out_of_range for identifiers outside the catalog.
const QosClass& LookupQos(int value);
double PdbSeconds(int value);
bool InCatalog(int value);

class UnknownQosError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// q_n = f(q_f), total over the catalog.
class MappingCondition {
 public:
  // Validates that `table` is total over the catalog and its images are
  // catalog values. Throws std::invalid_argument otherwise.
  MappingCondition(int id, std::map<int, int> table);

  // Conditions 1 to 6.
  static MappingCondition Builtin(int id);

  int id() const { return id_; }
  const std::map<int, int>& table() const { return table_; }

  // Throws UnknownQosError when q_f has no image.
  int Map(int five_qi) const;

  // Distinct NQIs in the image of the mapping.
  std::vector<int> ImageNqis() const;

 private:
  int id_;
  std::map<int, int> table_;
};

struct Flow5G {
  int id = 0;
  int gnb = 0;  // gNB index j
  int ue = 0;   // UE index within the gNB
  int five_qi = 0;
  double demand_bps = 0;
  int destination = 0;  // ground-station node id
};

struct NtnTraffic {
  int id = 0;
  int gnb = 0;
  int nqi = 0;
  int destination = 0;
  // r_n after any user-link scaling.
  double demand_bps = 0;
  // Sum of member r_f before scaling.
  double requested_bps = 0;
  std::vector<int> flow_ids;
};

struct TrafficSpec {
  int num_gnbs = 30;
  int ues_per_gnb = 5;
  int flows_per_ue = 20;
  double demand_per_flow_bps = 1e6;
  std::vector<int> destinations;
};

// Flows are numbered in gNB-major, then UE, then flow order. 5QI and
// destination are independent uniform draws from a stream seeded by
// (`seed`, gNB, UE); a UE's first k flows do not depend on flows_per_ue.
std::vector<Flow5G> GenerateTraffic(const TrafficSpec& spec, uint64_t seed);

int MapFiveQiToNqi(const MappingCondition& condition, int five_qi);

struct GnbAggregate {
  std::vector<NtnTraffic> traffic;
  // Factor applied to every r_n, 1 unless the user link was oversubscribed.
  double scale = 1.0;
  bool clipped = false;
};

// Groups one gNB's flows by (NQI, destination). When the total exceeds the
// user-link capacity every group is scaled down by the same factor. NtnTraffic
// ids start at `first_id` and follow (NQI, destination) order.
GnbAggregate AggregateAtGnb(std::span<const Flow5G> flows,
                            const MappingCondition& condition,
                            double user_link_capacity_bps, int first_id = 0);

}  // namespace ntnqos

#endif  // NTNQOS_QOS_H_
