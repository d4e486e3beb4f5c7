#include "ntnqos/qos.h"

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string>

namespace ntnqos {
namespace {

constexpr std::array<QosClass, 7> kCatalog = {{
    {80, 0.010, ResourceType::kNonGbr},
    {3, 0.050, ResourceType::kGbr},
    {65, 0.075, ResourceType::kGbr},
    {1, 0.100, ResourceType::kGbr},
    {2, 0.150, ResourceType::kGbr},
    {70, 0.200, ResourceType::kNonGbr},
    {4, 0.300, ResourceType::kGbr},
}};

// Unbiased draw in [0, n). std::uniform_int_distribution is not specified
// bit-for-bit, so seeded outputs would differ between standard libraries.
size_t UniformIndex(std::mt19937_64& rng, size_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<size_t>(v % n);
}

std::map<int, int> GroupTable(
    std::initializer_list<std::pair<int, std::initializer_list<int>>> groups) {
  std::map<int, int> table;
  for (const auto& [nqi, members] : groups) {
    for (int q : members) table[q] = nqi;
  }
  return table;
}

}  // namespace

std::span<const QosClass> SimulationCatalog() { return kCatalog; }

bool InCatalog(int value) {
  return std::any_of(kCatalog.begin(), kCatalog.end(),
                     [value](const QosClass& q) { return q.value == value; });
}

const QosClass& LookupQos(int value) {
  for (const QosClass& q : kCatalog) {
    if (q.value == value) return q;
  }
  throw UnknownQosError("QoS identifier " + std::to_string(value) +
                        " is not in the catalog");
}

double PdbSeconds(int value) { return LookupQos(value).pdb_s; }

MappingCondition::MappingCondition(int id, std::map<int, int> table)
    : id_(id), table_(std::move(table)) {
  for (const QosClass& q : kCatalog) {
    if (!table_.contains(q.value)) {
      throw std::invalid_argument("mapping condition " + std::to_string(id) +
                                  " has no image for 5QI " +
                                  std::to_string(q.value));
    }
  }
  for (const auto& [from, to] : table_) {
    if (!InCatalog(from) || !InCatalog(to)) {
      throw std::invalid_argument(
          "mapping condition " + std::to_string(id) + " maps " +
          std::to_string(from) + " -> " + std::to_string(to) +
          " outside the catalog");
    }
  }
}

MappingCondition MappingCondition::Builtin(int id) {
  switch (id) {
    case 1:
      return {1, GroupTable({{1, {80, 3, 65, 1, 2, 70, 4}}})};
    case 2:
      return {2, GroupTable({{4, {80, 3, 65, 1, 2, 70, 4}}})};
    case 3:
      return {3, GroupTable({{65, {80, 3, 65}}, {2, {1, 2}}, {4, {70, 4}}})};
    case 4:
      return {4, GroupTable({{80, {80}},
                             {65, {3, 65}},
                             {1, {1}},
                             {70, {2, 70}},
                             {4, {4}}})};
    case 5:
      return {5, GroupTable({{80, {80}},
                             {3, {3}},
                             {65, {65}},
                             {1, {1}},
                             {2, {2}},
                             {70, {70}},
                             {4, {4}}})};
    case 6:
      return {6, GroupTable({{80, {4}},
                             {3, {70}},
                             {65, {2}},
                             {1, {1}},
                             {2, {65}},
                             {70, {3}},
                             {4, {80}}})};
    default:
      throw std::invalid_argument("no built-in mapping condition " +
                                  std::to_string(id));
  }
}

int MappingCondition::Map(int five_qi) const {
  auto it = table_.find(five_qi);
  if (it == table_.end()) {
    throw UnknownQosError("5QI " + std::to_string(five_qi) +
                          " is not in the domain of mapping condition " +
                          std::to_string(id_));
  }
  return it->second;
}

std::vector<int> MappingCondition::ImageNqis() const {
  std::set<int> image;
  for (const auto& [from, to] : table_) image.insert(to);
  return {image.begin(), image.end()};
}

std::vector<Flow5G> GenerateTraffic(const TrafficSpec& spec, uint64_t seed) {
  if (spec.num_gnbs <= 0 || spec.ues_per_gnb <= 0 || spec.flows_per_ue <= 0) {
    throw std::invalid_argument("traffic counts must be positive");
  }
  if (spec.destinations.empty()) {
    throw std::invalid_argument("traffic needs at least one destination");
  }
  if (!(spec.demand_per_flow_bps > 0)) {
    throw std::invalid_argument("demand per flow must be > 0");
  }

  std::vector<Flow5G> flows;
  flows.reserve(static_cast<size_t>(spec.num_gnbs) * spec.ues_per_gnb *
                spec.flows_per_ue);
  for (int j = 0; j < spec.num_gnbs; ++j) {
    for (int u = 0; u < spec.ues_per_gnb; ++u) {
      // One stream per UE, so raising flows_per_ue only appends flows.
      std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                        static_cast<uint32_t>(j), static_cast<uint32_t>(u)};
      std::mt19937_64 rng(seq);
      for (int k = 0; k < spec.flows_per_ue; ++k) {
        Flow5G flow;
        flow.id = static_cast<int>(flows.size());
        flow.gnb = j;
        flow.ue = u;
        flow.five_qi = kCatalog[UniformIndex(rng, kCatalog.size())].value;
        flow.destination =
            spec.destinations[UniformIndex(rng, spec.destinations.size())];
        flow.demand_bps = spec.demand_per_flow_bps;
        flows.push_back(flow);
      }
    }
  }
  return flows;
}

int MapFiveQiToNqi(const MappingCondition& condition, int five_qi) {
  return condition.Map(five_qi);
}

GnbAggregate AggregateAtGnb(std::span<const Flow5G> flows,
                            const MappingCondition& condition,
                            double user_link_capacity_bps, int first_id) {
  GnbAggregate result;
  if (flows.empty()) return result;

  const int gnb = flows.front().gnb;
  std::map<std::pair<int, int>, NtnTraffic> groups;
  double total = 0;
  for (const Flow5G& f : flows) {
    if (f.gnb != gnb) {
      throw std::invalid_argument("AggregateAtGnb: flows from several gNBs");
    }
    int nqi = condition.Map(f.five_qi);
    NtnTraffic& t = groups[{nqi, f.destination}];
    t.gnb = gnb;
    t.nqi = nqi;
    t.destination = f.destination;
    t.requested_bps += f.demand_bps;
    t.flow_ids.push_back(f.id);
    total += f.demand_bps;
  }

  if (total > user_link_capacity_bps) {
    result.scale = user_link_capacity_bps / total;
    result.clipped = true;
  }
  int next_id = first_id;
  for (auto& [key, t] : groups) {
    if (t.requested_bps <= 0) continue;
    t.id = next_id++;
    t.demand_bps = t.requested_bps * result.scale;
    result.traffic.push_back(std::move(t));
  }
  return result;
}

}  // namespace ntnqos
