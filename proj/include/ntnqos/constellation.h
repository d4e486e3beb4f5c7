#ifndef NTNQOS_CONSTELLATION_H_
#define NTNQOS_CONSTELLATION_H_

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntnqos {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kSpeedOfLightMps = 299'792'458.0;
inline constexpr double kEarthMuM3PerS2 = 3.986004418e14;

struct Vec3 {
  double x = 0;
  double y = 0;
  double z = 0;

  double Norm() const { return std::sqrt(x * x + y * y + z * z); }
  double Dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;
};

struct GeoPoint {
  double latitude_deg = 0;
  double longitude_deg = 0;
  double altitude_m = 0;

  // Throws std::invalid_argument when a coordinate is out of range.
  void Validate() const;

  // Earth-centered Cartesian position on a spherical Earth.
  Vec3 ToCartesian() const;
};

struct WalkerParams {
  int num_planes = 6;
  int sats_per_plane = 15;
  double altitude_m = 1'000'000.0;
  double inclination_deg = 90.0;
  // Total right-ascension span over which the planes are spread. 180 deg
  // gives a Walker-star (polar) layout.
  double raan_spread_deg = 180.0;
  double phase_offset_deg = 0.0;
  double epoch_s = 0.0;

  int total_satellites() const { return num_planes * sats_per_plane; }
  void Validate() const;
};

enum class NodeKind { kSatellite, kGroundStation, kGnb };
enum class LinkKind { kUser, kInterSatellite, kFeeder };

const char* ToString(NodeKind kind);
const char* ToString(LinkKind kind);

struct Node {
  int id = -1;
  NodeKind kind = NodeKind::kSatellite;
  Vec3 position;
  // Index among nodes of the same kind (satellite index, ground station
  // index, gNB index).
  int kind_index = -1;
};

struct Link {
  int id = -1;
  LinkKind kind = LinkKind::kInterSatellite;
  int src = -1;  // egress node u(e)
  int dst = -1;  // ingress node v(e)
  double capacity_bps = 0;
  double latency_s = 0;
};

struct LinkCapacities {
  double user_bps = 500e6;
  double isl_bps = 10e9;
  double feeder_bps = 10e9;
};

class NoVisibleSatelliteError : public std::runtime_error {
 public:
  explicit NoVisibleSatelliteError(int gnb_index);
  int gnb_index() const { return gnb_index_; }

 private:
  int gnb_index_;
};

// Snapshot NTN graph. Nodes are numbered densely in insertion order; the
// builder always inserts satellites first, then ground stations, then gNBs.
// Immutable once built; safe to share across threads.
class Topology {
 public:
  int AddNode(NodeKind kind, const Vec3& position);
  // Adds a directed link. Latency defaults to the propagation delay between
  // the two endpoint positions.
  int AddLink(LinkKind kind, int src, int dst, double capacity_bps,
              std::optional<double> latency_s = std::nullopt);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Node& node(int id) const { return nodes_.at(id); }
  const Link& link(int id) const { return links_.at(id); }

  const std::vector<int>& satellites() const { return satellites_; }
  const std::vector<int>& ground_stations() const { return ground_stations_; }
  const std::vector<int>& gnbs() const { return gnbs_; }

  const std::vector<int>& out_links(int node_id) const {
    return out_.at(node_id);
  }
  const std::vector<int>& in_links(int node_id) const {
    return in_.at(node_id);
  }

  std::vector<int> LinksOfKind(LinkKind kind) const;

  // The user link leaving a gNB, or nullopt if it has none.
  std::optional<int> UserLinkOf(int gnb_node_id) const;

  bool IsSatellite(int node_id) const;
  bool IsGroundStation(int node_id) const;

  // Debug dump: {"nodes": [...], "links": [...]}.
  std::string ToJson() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<int> satellites_;
  std::vector<int> ground_stations_;
  std::vector<int> gnbs_;
};

// Circular-orbit positions at params.epoch_s, plane-major order: satellite
// index = plane * sats_per_plane + slot.
std::vector<Vec3> PropagateWalker(const WalkerParams& params);

double LinkLatency(const Vec3& a, const Vec3& b);

// Elevation of `target` above the local horizon of `ground`, in degrees.
double ElevationDeg(const Vec3& ground, const Vec3& target);

// Index into `satellites` of the visible satellite with the smallest slant
// range; ties go to the lowest index. Throws NoVisibleSatelliteError.
int NearestVisibleSatellite(int gnb_index, const Vec3& gnb,
                            std::span<const Vec3> satellites,
                            double min_elevation_deg);

struct TopologyOptions {
  LinkCapacities capacities;
  double min_elevation_deg = 10.0;
  // Connect the last plane back to the first (torus). When false the seam
  // between the counter-rotating planes carries no ISLs.
  bool close_seam = true;
};

Topology BuildTopology(const WalkerParams& walker,
                       std::span<const GeoPoint> ogs_sites,
                       std::span<const GeoPoint> gnb_sites,
                       const TopologyOptions& options);

}  // namespace ntnqos

#endif  // NTNQOS_CONSTELLATION_H_
