#include "ntnqos/constellation.h"

#include <algorithm>
#include <numbers>
#include <set>
#include <utility>

#include "json.hpp"

namespace ntnqos {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Relative slack under which two slant ranges count as equal.
constexpr double kRangeTieTolerance = 1e-12;

}  // namespace

void GeoPoint::Validate() const {
  if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0)) {
    throw std::invalid_argument("latitude_deg out of [-90, 90]: " +
                                std::to_string(latitude_deg));
  }
  if (!(longitude_deg >= -180.0 && longitude_deg < 180.0)) {
    throw std::invalid_argument("longitude_deg out of [-180, 180): " +
                                std::to_string(longitude_deg));
  }
  if (!(altitude_m >= 0.0)) {
    throw std::invalid_argument("altitude_m must be >= 0");
  }
}

Vec3 GeoPoint::ToCartesian() const {
  double lat = latitude_deg * kDegToRad;
  double lon = longitude_deg * kDegToRad;
  double r = kEarthRadiusM + altitude_m;
  return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon),
          r * std::sin(lat)};
}

void WalkerParams::Validate() const {
  if (num_planes <= 0 || sats_per_plane <= 0) {
    throw std::invalid_argument(
        "walker constellation needs at least one plane and one satellite per "
        "plane");
  }
  if (!(inclination_deg > 0.0 && inclination_deg <= 180.0)) {
    throw std::invalid_argument("inclination_deg out of (0, 180]");
  }
  if (!(altitude_m > 0.0)) {
    throw std::invalid_argument("walker altitude_m must be > 0");
  }
}

const char* ToString(NodeKind kind) {
  switch (kind) {
    case NodeKind::kSatellite:
      return "satellite";
    case NodeKind::kGroundStation:
      return "ground_station";
    case NodeKind::kGnb:
      return "gnb";
  }
  return "?";
}

const char* ToString(LinkKind kind) {
  switch (kind) {
    case LinkKind::kUser:
      return "user";
    case LinkKind::kInterSatellite:
      return "isl";
    case LinkKind::kFeeder:
      return "feeder";
  }
  return "?";
}

NoVisibleSatelliteError::NoVisibleSatelliteError(int gnb_index)
    : std::runtime_error("gNB " + std::to_string(gnb_index) +
                         " has no visible satellite above the elevation mask"),
      gnb_index_(gnb_index) {}

int Topology::AddNode(NodeKind kind, const Vec3& position) {
  Node node;
  node.id = static_cast<int>(nodes_.size());
  node.kind = kind;
  node.position = position;
  switch (kind) {
    case NodeKind::kSatellite:
      node.kind_index = static_cast<int>(satellites_.size());
      satellites_.push_back(node.id);
      break;
    case NodeKind::kGroundStation:
      node.kind_index = static_cast<int>(ground_stations_.size());
      ground_stations_.push_back(node.id);
      break;
    case NodeKind::kGnb:
      node.kind_index = static_cast<int>(gnbs_.size());
      gnbs_.push_back(node.id);
      break;
  }
  nodes_.push_back(node);
  out_.emplace_back();
  in_.emplace_back();
  return node.id;
}

int Topology::AddLink(LinkKind kind, int src, int dst, double capacity_bps,
                      std::optional<double> latency_s) {
  const Node& u = nodes_.at(src);
  const Node& v = nodes_.at(dst);
  bool consistent = false;
  switch (kind) {
    case LinkKind::kUser:
      consistent =
          u.kind == NodeKind::kGnb && v.kind == NodeKind::kSatellite;
      break;
    case LinkKind::kInterSatellite:
      consistent = u.kind == NodeKind::kSatellite &&
                   v.kind == NodeKind::kSatellite && src != dst;
      break;
    case LinkKind::kFeeder:
      consistent = u.kind == NodeKind::kSatellite &&
                   v.kind == NodeKind::kGroundStation;
      break;
  }
  if (!consistent) {
    throw std::invalid_argument(std::string("link kind ") + ToString(kind) +
                                " does not match endpoint kinds");
  }
  if (!(capacity_bps > 0.0)) {
    throw std::invalid_argument("link capacity must be > 0");
  }
  double latency = latency_s.value_or(LinkLatency(u.position, v.position));
  if (!(latency > 0.0)) {
    throw std::invalid_argument("link latency must be > 0");
  }

  Link link;
  link.id = static_cast<int>(links_.size());
  link.kind = kind;
  link.src = src;
  link.dst = dst;
  link.capacity_bps = capacity_bps;
  link.latency_s = latency;
  links_.push_back(link);
  out_[src].push_back(link.id);
  in_[dst].push_back(link.id);
  return link.id;
}

std::vector<int> Topology::LinksOfKind(LinkKind kind) const {
  std::vector<int> out;
  for (const Link& link : links_) {
    if (link.kind == kind) out.push_back(link.id);
  }
  return out;
}

std::optional<int> Topology::UserLinkOf(int gnb_node_id) const {
  for (int id : out_.at(gnb_node_id)) {
    if (links_[id].kind == LinkKind::kUser) return id;
  }
  return std::nullopt;
}

bool Topology::IsSatellite(int node_id) const {
  return node_id >= 0 && node_id < static_cast<int>(nodes_.size()) &&
         nodes_[node_id].kind == NodeKind::kSatellite;
}

bool Topology::IsGroundStation(int node_id) const {
  return node_id >= 0 && node_id < static_cast<int>(nodes_.size()) &&
         nodes_[node_id].kind == NodeKind::kGroundStation;
}

std::string Topology::ToJson() const {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const Node& n : nodes_) {
    doc["nodes"].push_back({{"id", n.id},
                            {"kind", ToString(n.kind)},
                            {"kind_index", n.kind_index},
                            {"x_m", n.position.x},
                            {"y_m", n.position.y},
                            {"z_m", n.position.z}});
  }
  doc["links"] = nlohmann::ordered_json::array();
  for (const Link& l : links_) {
    doc["links"].push_back({{"id", l.id},
                            {"kind", ToString(l.kind)},
                            {"u", l.src},
                            {"v", l.dst},
                            {"capacity_bps", l.capacity_bps},
                            {"latency_s", l.latency_s}});
  }
  return doc.dump(2);
}

std::vector<Vec3> PropagateWalker(const WalkerParams& params) {
  params.Validate();
  const double radius = kEarthRadiusM + params.altitude_m;
  const double mean_motion = std::sqrt(kEarthMuM3PerS2 / (radius * radius * radius));
  const double inc = params.inclination_deg * kDegToRad;

  std::vector<Vec3> positions;
  positions.reserve(params.total_satellites());
  for (int p = 0; p < params.num_planes; ++p) {
    double raan =
        p * params.raan_spread_deg / params.num_planes * kDegToRad;
    for (int s = 0; s < params.sats_per_plane; ++s) {
      double arg_deg = s * 360.0 / params.sats_per_plane +
                       p * params.phase_offset_deg;
      double u = arg_deg * kDegToRad + mean_motion * params.epoch_s;
      double cu = std::cos(u), su = std::sin(u);
      double co = std::cos(raan), so = std::sin(raan);
      positions.push_back({radius * (cu * co - su * std::cos(inc) * so),
                           radius * (cu * so + su * std::cos(inc) * co),
                           radius * (su * std::sin(inc))});
    }
  }
  return positions;
}

double LinkLatency(const Vec3& a, const Vec3& b) {
  return (a - b).Norm() / kSpeedOfLightMps;
}

double ElevationDeg(const Vec3& ground, const Vec3& target) {
  Vec3 los = target - ground;
  double range = los.Norm();
  double up = ground.Norm();
  if (range == 0.0 || up == 0.0) return 90.0;
  double s = los.Dot(ground) / (range * up);
  s = std::clamp(s, -1.0, 1.0);
  return std::asin(s) / kDegToRad;
}

int NearestVisibleSatellite(int gnb_index, const Vec3& gnb,
                            std::span<const Vec3> satellites,
                            double min_elevation_deg) {
  int best = -1;
  double best_range = 0;
  for (int i = 0; i < static_cast<int>(satellites.size()); ++i) {
    if (ElevationDeg(gnb, satellites[i]) < min_elevation_deg) continue;
    double range = (satellites[i] - gnb).Norm();
    if (best < 0 || range < best_range * (1.0 - kRangeTieTolerance)) {
      best = i;
      best_range = range;
    }
  }
  if (best < 0) throw NoVisibleSatelliteError(gnb_index);
  return best;
}

Topology BuildTopology(const WalkerParams& walker,
                       std::span<const GeoPoint> ogs_sites,
                       std::span<const GeoPoint> gnb_sites,
                       const TopologyOptions& options) {
  if (ogs_sites.empty()) {
    throw std::invalid_argument("topology needs at least one ground station");
  }
  if (gnb_sites.empty()) {
    throw std::invalid_argument("topology needs at least one gNB");
  }
  for (const GeoPoint& g : ogs_sites) g.Validate();
  for (const GeoPoint& g : gnb_sites) g.Validate();

  std::vector<Vec3> sat_positions = PropagateWalker(walker);
  Topology topo;
  for (const Vec3& p : sat_positions) topo.AddNode(NodeKind::kSatellite, p);
  std::vector<int> ogs_ids;
  for (const GeoPoint& g : ogs_sites) {
    ogs_ids.push_back(topo.AddNode(NodeKind::kGroundStation, g.ToCartesian()));
  }
  std::vector<int> gnb_ids;
  for (const GeoPoint& g : gnb_sites) {
    gnb_ids.push_back(topo.AddNode(NodeKind::kGnb, g.ToCartesian()));
  }

  // Resolve every user link before adding any, so a failure names the first
  // uncovered gNB without leaving a half-built graph behind.
  std::vector<int> attach(gnb_ids.size());
  for (size_t j = 0; j < gnb_ids.size(); ++j) {
    attach[j] = NearestVisibleSatellite(static_cast<int>(j),
                                        topo.node(gnb_ids[j]).position,
                                        sat_positions,
                                        options.min_elevation_deg);
  }
  for (size_t j = 0; j < gnb_ids.size(); ++j) {
    topo.AddLink(LinkKind::kUser, gnb_ids[j], attach[j],
                 options.capacities.user_bps);
  }

  // ISL grid: ring neighbours in the plane, same slot in adjacent planes.
  const int planes = walker.num_planes;
  const int per_plane = walker.sats_per_plane;
  auto index_of = [per_plane](int p, int s) { return p * per_plane + s; };
  std::set<std::pair<int, int>> seen;
  for (int p = 0; p < planes; ++p) {
    for (int s = 0; s < per_plane; ++s) {
      int from = index_of(p, s);
      std::vector<int> neighbours = {
          index_of(p, (s + 1) % per_plane),
          index_of(p, (s + per_plane - 1) % per_plane)};
      if (p + 1 < planes) {
        neighbours.push_back(index_of(p + 1, s));
      } else if (options.close_seam) {
        neighbours.push_back(index_of(0, s));
      }
      if (p > 0) {
        neighbours.push_back(index_of(p - 1, s));
      } else if (options.close_seam) {
        neighbours.push_back(index_of(planes - 1, s));
      }
      for (int to : neighbours) {
        if (to == from || !seen.emplace(from, to).second) continue;
        topo.AddLink(LinkKind::kInterSatellite, from, to,
                     options.capacities.isl_bps);
      }
    }
  }

  for (int sat = 0; sat < static_cast<int>(sat_positions.size()); ++sat) {
    for (int ogs : ogs_ids) {
      if (ElevationDeg(topo.node(ogs).position, sat_positions[sat]) >=
          options.min_elevation_deg) {
        topo.AddLink(LinkKind::kFeeder, sat, ogs,
                     options.capacities.feeder_bps);
      }
    }
  }
  return topo;
}

}  // namespace ntnqos
