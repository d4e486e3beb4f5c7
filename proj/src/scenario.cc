#include "ntnqos/scenario.h"

#include <fmt/format.h>
#include <toml.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace ntnqos {
namespace {

constexpr int kSchemaVersion = 1;
constexpr double kMbps = 1e6;

// ---------------------------------------------------------------------------
// TOML access with strict key checking.

std::string Join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void CheckKeys(const toml::table& t, const std::string& path,
               std::initializer_list<std::string_view> allowed) {
  for (auto&& [key, node] : t) {
    std::string_view k = key.str();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError(fmt::format("unknown key '{}'", Join(path, k)));
    }
  }
}

const toml::table* SubTable(const toml::table& t, std::string_view key,
                            const std::string& path) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(fmt::format("{} must be a table", Join(path, key)));
  return n->as_table();
}

const toml::array* Array(const toml::table& t, std::string_view key,
                         const std::string& path, bool required = false) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (required) throw ConfigError(fmt::format("missing required key {}", Join(path, key)));
    return nullptr;
  }
  if (!n->is_array()) throw ConfigError(fmt::format("{} must be an array", Join(path, key)));
  return n->as_array();
}

double AsNumber(const toml::node& n, const std::string& where) {
  if (n.is_integer()) return static_cast<double>(*n.value<int64_t>());
  if (n.is_floating_point()) return *n.value<double>();
  throw ConfigError(fmt::format("{} must be a number", where));
}

int64_t AsInteger(const toml::node& n, const std::string& where) {
  if (!n.is_integer()) throw ConfigError(fmt::format("{} must be an integer", where));
  return *n.value<int64_t>();
}

void ReadNumber(const toml::table& t, std::string_view key, const std::string& path,
                double& out, double scale = 1.0) {
  if (const toml::node* n = t.get(key)) out = AsNumber(*n, Join(path, key)) * scale;
}

void ReadInt(const toml::table& t, std::string_view key, const std::string& path, int& out) {
  if (const toml::node* n = t.get(key)) {
    int64_t v = AsInteger(*n, Join(path, key));
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(fmt::format("{} is out of range", Join(path, key)));
    }
    out = static_cast<int>(v);
  }
}

void ReadSeed(const toml::node& n, const std::string& where, uint64_t& out) {
  int64_t v = AsInteger(n, where);
  if (v < 0) throw ConfigError(fmt::format("{} must be >= 0", where));
  out = static_cast<uint64_t>(v);
}

void ReadBool(const toml::table& t, std::string_view key, const std::string& path, bool& out) {
  if (const toml::node* n = t.get(key)) {
    if (!n->is_boolean()) throw ConfigError(fmt::format("{} must be a boolean", Join(path, key)));
    out = *n->value<bool>();
  }
}

void ReadString(const toml::table& t, std::string_view key, const std::string& path,
                std::string& out) {
  if (const toml::node* n = t.get(key)) {
    if (!n->is_string()) throw ConfigError(fmt::format("{} must be a string", Join(path, key)));
    out = *n->value<std::string>();
  }
}

std::vector<int> IntList(const toml::array& a, const std::string& where) {
  std::vector<int> out;
  for (size_t k = 0; k < a.size(); ++k) {
    out.push_back(static_cast<int>(AsInteger(a[k], fmt::format("{}[{}]", where, k))));
  }
  return out;
}

const toml::table& TableAt(const toml::array& a, size_t k, const std::string& where) {
  if (!a[k].is_table()) throw ConfigError(fmt::format("{}[{}] must be a table", where, k));
  return *a[k].as_table();
}

GeoPoint ReadSite(const toml::table& t, const std::string& path) {
  CheckKeys(t, path, {"name", "lat_deg", "lon_deg", "alt_m"});
  if (!t.get("lat_deg") || !t.get("lon_deg")) {
    throw ConfigError(fmt::format("{} needs lat_deg and lon_deg", path));
  }
  GeoPoint p;
  ReadNumber(t, "lat_deg", path, p.latitude_deg);
  ReadNumber(t, "lon_deg", path, p.longitude_deg);
  ReadNumber(t, "alt_m", path, p.altitude_m);
  return p;
}

std::vector<GeoPoint> ReadSites(const toml::array& a, const std::string& path) {
  std::vector<GeoPoint> out;
  for (size_t k = 0; k < a.size(); ++k) {
    out.push_back(ReadSite(TableAt(a, k, path), fmt::format("{}[{}]", path, k)));
  }
  return out;
}

NqiGroups ReadGroups(const toml::array& a, const std::string& path) {
  NqiGroups groups;
  for (size_t k = 0; k < a.size(); ++k) {
    std::string where = fmt::format("{}[{}]", path, k);
    if (!a[k].is_array()) throw ConfigError(where + " must be an array of NQIs");
    groups.push_back(IntList(*a[k].as_array(), where));
  }
  return groups;
}

// ---------------------------------------------------------------------------

uint64_t Fnv1a(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double UnitDraw(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

std::string FormatGroups(const NqiGroups& groups) {
  std::string s = "[";
  for (const auto& g : groups) s += fmt::format("[{}]", fmt::join(g, ","));
  return s + "]";
}

void WriteRecord(const std::filesystem::path& path, const ScenarioConfig& config,
                 const RunRecord& record) {
  nlohmann::ordered_json j;
  j["name"] = config.name;
  j["config_hash"] = record.config_hash;
  j["csv"] = record.csv_path.string();
  j["flows"] = record.flows_path.string();
  j["resumed"] = record.resumed;
  j["executed"] = record.executed;
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const CsvRow& r : record.rows) {
    nlohmann::ordered_json p;
    p["key"] = r.Key();
    p["status"] = r.status;
    p["sbar_f"] = r.sbar_f;
    p["sbar_l"] = std::isnan(r.sbar_l) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.sbar_l);
    p["J"] = std::isnan(r.J) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.J);
    p["solve_time_s"] = r.solve_time_s;
    points.push_back(std::move(p));
  }
  j["points"] = std::move(points);
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write run record " + path.string());
  out << j.dump(2) << "\n";
}

std::optional<std::string> RecordedHash(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    return j.at("config_hash").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ScenarioConfig

void ScenarioConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  try {
    walker.Validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("constellation: ") + e.what());
  }
  const LinkCapacities& c = topology.capacities;
  if (!(c.user_bps > 0)) fail("capacities.user_mbps must be > 0");
  if (!(c.isl_bps > 0)) fail("capacities.isl_mbps must be > 0");
  if (!(c.feeder_bps > 0)) fail("capacities.feeder_mbps must be > 0");
  if (!(topology.min_elevation_deg >= 0 && topology.min_elevation_deg < 90)) {
    fail("constellation.min_elevation_deg must be in [0, 90)");
  }
  if (ogs_sites.empty()) fail("ground_stations must list at least one site");
  for (size_t k = 0; k < ogs_sites.size(); ++k) {
    try {
      ogs_sites[k].Validate();
    } catch (const std::invalid_argument& e) {
      fail(fmt::format("ground_stations[{}]: {}", k, e.what()));
    }
  }
  if (gnb_sites.empty() == (gnb_count == 0)) {
    fail("gnbs needs exactly one of sites or count");
  }
  if (gnb_count < 0) fail("gnbs.count must be > 0");
  for (size_t k = 0; k < gnb_sites.size(); ++k) {
    try {
      gnb_sites[k].Validate();
    } catch (const std::invalid_argument& e) {
      fail(fmt::format("gnbs.sites[{}]: {}", k, e.what()));
    }
  }
  const int num_gnbs = gnb_count > 0 ? gnb_count : static_cast<int>(gnb_sites.size());
  if (ues_per_gnb <= 0) fail("traffic.ues_per_gnb must be > 0");
  if (!(demand_per_flow_bps > 0)) fail("traffic.demand_per_flow_mbps must be > 0");

  auto check_unique = [&](const auto& list, const char* field) {
    if (list.empty()) fail(fmt::format("{} must not be empty", field));
    std::set<std::decay_t<decltype(list[0])>> seen(list.begin(), list.end());
    if (seen.size() != list.size()) fail(fmt::format("{} has duplicate entries", field));
  };
  check_unique(flows_per_ue, "traffic.flows_per_ue");
  for (int f : flows_per_ue) {
    if (f <= 0) fail("traffic.flows_per_ue entries must be > 0");
  }
  check_unique(seeds, "traffic.seeds");
  check_unique(conditions, "mapping.conditions");
  for (int id : conditions) {
    if (!mapping_tables.count(id)) fail(fmt::format("mapping.conditions: unknown condition {}", id));
  }
  for (const auto& [gnb, id] : gnb_mapping_overrides) {
    if (gnb < 0 || gnb >= num_gnbs) {
      fail(fmt::format("mapping.gnb_overrides: gNB {} out of range", gnb));
    }
    if (!mapping_tables.count(id)) {
      fail(fmt::format("mapping.gnb_overrides: unknown condition {}", id));
    }
  }
  if (weights.empty()) fail("optimization.weights must not be empty");
  std::set<double> w_seen;
  for (size_t k = 0; k < weights.size(); ++k) {
    const WeightPair& w = weights[k];
    if (!(w.w_flow >= 0 && w.w_latency >= 0)) {
      fail(fmt::format("optimization.weights[{}]: weights must be >= 0", k));
    }
    if (std::abs(w.w_flow + w.w_latency - 1.0) > 1e-9) {
      fail(fmt::format("optimization.weights[{}]: w_f + w_l must equal 1 (got {})", k,
                       w.w_flow + w.w_latency));
    }
    if (!w_seen.insert(w.w_flow).second) fail("optimization.weights has duplicate w_f");
  }
  if (!(solver.time_limit_s > 0)) fail("optimization.time_limit_s must be > 0");
  if (!(solver.abs_gap >= 0)) fail("optimization.abs_gap must be >= 0");
  if (!(solver.rel_gap >= 0)) fail("optimization.rel_gap must be >= 0");
  if (!(solver.integrality_tolerance > 0 && solver.integrality_tolerance < 0.5)) {
    fail("optimization.integrality_tolerance must be in (0, 0.5)");
  }
  if (!(solver.feasibility_tolerance > 0)) fail("optimization.feasibility_tolerance must be > 0");
  if (csv_path.empty()) fail("output.csv must be set");
}

MappingCondition ScenarioConfig::Condition(int id) const {
  auto it = mapping_tables.find(id);
  if (it == mapping_tables.end()) throw ConfigError(fmt::format("unknown condition {}", id));
  return MappingCondition(id, it->second);
}

uint64_t ScenarioConfig::Hash() const {
  std::string s;
  auto add = [&s](std::string_view field, const auto& value) {
    s += fmt::format("{}={};", field, value);
  };
  add("walker", fmt::format("{},{},{},{},{},{},{}", walker.num_planes, walker.sats_per_plane,
                            walker.altitude_m, walker.inclination_deg, walker.raan_spread_deg,
                            walker.phase_offset_deg, walker.epoch_s));
  add("caps", fmt::format("{},{},{}", topology.capacities.user_bps, topology.capacities.isl_bps,
                          topology.capacities.feeder_bps));
  add("mask", topology.min_elevation_deg);
  add("seam", topology.close_seam);
  for (const GeoPoint& g : ogs_sites) {
    add("ogs", fmt::format("{},{},{}", g.latitude_deg, g.longitude_deg, g.altitude_m));
  }
  for (const GeoPoint& g : gnb_sites) {
    add("gnb", fmt::format("{},{},{}", g.latitude_deg, g.longitude_deg, g.altitude_m));
  }
  add("gnb_count", fmt::format("{},{}", gnb_count, gnb_placement_seed));
  add("ues", ues_per_gnb);
  add("flows", fmt::format("{}", fmt::join(flows_per_ue, ",")));
  add("demand", demand_per_flow_bps);
  add("seeds", fmt::format("{}", fmt::join(seeds, ",")));
  add("conditions", fmt::format("{}", fmt::join(conditions, ",")));
  for (const auto& [id, table] : mapping_tables) {
    std::string t;
    for (const auto& [q_f, q_n] : table) t += fmt::format("{}>{} ", q_f, q_n);
    add(fmt::format("map{}", id), t);
  }
  for (const auto& [gnb, id] : gnb_mapping_overrides) add("override", fmt::format("{}:{}", gnb, id));
  add("groups", FormatGroups(slice_policy.default_groups()));
  for (const auto& [sat, groups] : slice_policy.overrides()) {
    add(fmt::format("groups{}", sat), FormatGroups(groups));
  }
  for (const WeightPair& w : weights) add("w", fmt::format("{},{}", w.w_flow, w.w_latency));
  add("solver", fmt::format("{},{},{},{},{}", solver.time_limit_s, solver.abs_gap,
                            solver.rel_gap, solver.integrality_tolerance,
                            solver.feasibility_tolerance));
  add("e2e", end_to_end_latency);
  return Fnv1a(s);
}

std::string ScenarioConfig::HashHex() const { return fmt::format("{:016x}", Hash()); }

ScenarioConfig ParseScenario(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(fmt::format("TOML syntax error at line {}: {}",
                                  e.source().begin.line, e.description()));
  }
  CheckKeys(root, "",
            {"schema", "name", "constellation", "capacities", "ground_stations", "gnbs",
             "traffic", "mapping", "slicing", "optimization", "metrics", "output"});
  const toml::node* schema = root.get("schema");
  if (!schema) throw ConfigError("missing required key schema");
  if (AsInteger(*schema, "schema") != kSchemaVersion) {
    throw ConfigError(fmt::format("schema must be {}", kSchemaVersion));
  }

  ScenarioConfig c;
  ReadString(root, "name", "", c.name);
  for (int id = 1; id <= 6; ++id) c.mapping_tables[id] = MappingCondition::Builtin(id).table();

  if (const toml::table* t = SubTable(root, "constellation", "")) {
    const std::string p = "constellation";
    CheckKeys(*t, p,
              {"planes", "sats_per_plane", "altitude_km", "inclination_deg", "raan_spread_deg",
               "phase_offset_deg", "epoch_s", "min_elevation_deg", "close_seam"});
    ReadInt(*t, "planes", p, c.walker.num_planes);
    ReadInt(*t, "sats_per_plane", p, c.walker.sats_per_plane);
    ReadNumber(*t, "altitude_km", p, c.walker.altitude_m, 1e3);
    ReadNumber(*t, "inclination_deg", p, c.walker.inclination_deg);
    ReadNumber(*t, "raan_spread_deg", p, c.walker.raan_spread_deg);
    ReadNumber(*t, "phase_offset_deg", p, c.walker.phase_offset_deg);
    ReadNumber(*t, "epoch_s", p, c.walker.epoch_s);
    ReadNumber(*t, "min_elevation_deg", p, c.topology.min_elevation_deg);
    ReadBool(*t, "close_seam", p, c.topology.close_seam);
  }
  if (const toml::table* t = SubTable(root, "capacities", "")) {
    const std::string p = "capacities";
    CheckKeys(*t, p, {"user_mbps", "isl_mbps", "feeder_mbps"});
    ReadNumber(*t, "user_mbps", p, c.topology.capacities.user_bps, kMbps);
    ReadNumber(*t, "isl_mbps", p, c.topology.capacities.isl_bps, kMbps);
    ReadNumber(*t, "feeder_mbps", p, c.topology.capacities.feeder_bps, kMbps);
  }
  c.ogs_sites = ReadSites(*Array(root, "ground_stations", "", true), "ground_stations");

  const toml::table* gnbs = SubTable(root, "gnbs", "");
  if (!gnbs) throw ConfigError("missing required key gnbs");
  CheckKeys(*gnbs, "gnbs", {"count", "placement_seed", "sites"});
  ReadInt(*gnbs, "count", "gnbs", c.gnb_count);
  if (const toml::node* n = gnbs->get("placement_seed")) {
    ReadSeed(*n, "gnbs.placement_seed", c.gnb_placement_seed);
  }
  if (const toml::array* a = Array(*gnbs, "sites", "gnbs")) c.gnb_sites = ReadSites(*a, "gnbs.sites");

  const toml::table* traffic = SubTable(root, "traffic", "");
  if (!traffic) throw ConfigError("missing required key traffic");
  CheckKeys(*traffic, "traffic", {"ues_per_gnb", "flows_per_ue", "demand_per_flow_mbps", "seeds"});
  ReadInt(*traffic, "ues_per_gnb", "traffic", c.ues_per_gnb);
  ReadNumber(*traffic, "demand_per_flow_mbps", "traffic", c.demand_per_flow_bps, kMbps);
  c.flows_per_ue = IntList(*Array(*traffic, "flows_per_ue", "traffic", true), "traffic.flows_per_ue");
  const toml::array& seeds = *Array(*traffic, "seeds", "traffic", true);
  for (size_t k = 0; k < seeds.size(); ++k) {
    uint64_t s = 0;
    ReadSeed(seeds[k], fmt::format("traffic.seeds[{}]", k), s);
    c.seeds.push_back(s);
  }

  const toml::table* mapping = SubTable(root, "mapping", "");
  if (!mapping) throw ConfigError("missing required key mapping");
  CheckKeys(*mapping, "mapping", {"conditions", "custom", "gnb_overrides"});
  if (const toml::array* custom = Array(*mapping, "custom", "mapping")) {
    for (size_t k = 0; k < custom->size(); ++k) {
      const std::string p = fmt::format("mapping.custom[{}]", k);
      const toml::table& t = TableAt(*custom, k, "mapping.custom");
      CheckKeys(t, p, {"id", "pairs"});
      int id = 0;
      ReadInt(t, "id", p, id);
      if (id <= 6) throw ConfigError(p + ".id must be > 6; 1 to 6 are built in");
      if (c.mapping_tables.count(id)) throw ConfigError(fmt::format("{}.id {} is repeated", p, id));
      std::map<int, int> table;
      const toml::array& pairs = *Array(t, "pairs", p, true);
      for (size_t q = 0; q < pairs.size(); ++q) {
        std::string where = fmt::format("{}.pairs[{}]", p, q);
        if (!pairs[q].is_array() || pairs[q].as_array()->size() != 2) {
          throw ConfigError(where + " must be a [5QI, NQI] pair");
        }
        std::vector<int> pair = IntList(*pairs[q].as_array(), where);
        if (!table.emplace(pair[0], pair[1]).second) {
          throw ConfigError(fmt::format("{}: 5QI {} mapped twice", where, pair[0]));
        }
      }
      try {
        MappingCondition check(id, table);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(p + ": " + e.what());
      }
      c.mapping_tables[id] = table;
    }
  }
  c.conditions = IntList(*Array(*mapping, "conditions", "mapping", true), "mapping.conditions");
  if (const toml::array* o = Array(*mapping, "gnb_overrides", "mapping")) {
    for (size_t k = 0; k < o->size(); ++k) {
      const std::string p = fmt::format("mapping.gnb_overrides[{}]", k);
      const toml::table& t = TableAt(*o, k, "mapping.gnb_overrides");
      CheckKeys(t, p, {"gnb", "condition"});
      int gnb = -1, id = 0;
      ReadInt(t, "gnb", p, gnb);
      ReadInt(t, "condition", p, id);
      if (!c.gnb_mapping_overrides.emplace(gnb, id).second) {
        throw ConfigError(fmt::format("{}: gNB {} overridden twice", p, gnb));
      }
    }
  }

  if (const toml::table* t = SubTable(root, "slicing", "")) {
    CheckKeys(*t, "slicing", {"groups", "satellites"});
    try {
      NqiGroups groups;
      if (const toml::array* a = Array(*t, "groups", "slicing")) groups = ReadGroups(*a, "slicing.groups");
      c.slice_policy = SlicePolicy(groups);
      if (const toml::array* a = Array(*t, "satellites", "slicing")) {
        for (size_t k = 0; k < a->size(); ++k) {
          const std::string p = fmt::format("slicing.satellites[{}]", k);
          const toml::table& s = TableAt(*a, k, "slicing.satellites");
          CheckKeys(s, p, {"satellite", "groups"});
          int sat = -1;
          ReadInt(s, "satellite", p, sat);
          if (sat < 0 || sat >= c.walker.total_satellites()) {
            throw ConfigError(fmt::format("{}.satellite {} out of range", p, sat));
          }
          c.slice_policy.SetSatelliteGroups(sat, ReadGroups(*Array(s, "groups", p, true), p + ".groups"));
        }
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("slicing: ") + e.what());
    }
  }

  const toml::table* opt = SubTable(root, "optimization", "");
  if (!opt) throw ConfigError("missing required key optimization");
  CheckKeys(*opt, "optimization",
            {"weights", "time_limit_s", "abs_gap", "rel_gap", "integrality_tolerance",
             "feasibility_tolerance"});
  const toml::array& weights = *Array(*opt, "weights", "optimization", true);
  for (size_t k = 0; k < weights.size(); ++k) {
    std::string where = fmt::format("optimization.weights[{}]", k);
    if (!weights[k].is_array() || weights[k].as_array()->size() != 2) {
      throw ConfigError(where + " must be a [w_f, w_l] pair");
    }
    const toml::array& w = *weights[k].as_array();
    c.weights.push_back({AsNumber(w[0], where), AsNumber(w[1], where)});
  }
  ReadNumber(*opt, "time_limit_s", "optimization", c.solver.time_limit_s);
  ReadNumber(*opt, "abs_gap", "optimization", c.solver.abs_gap);
  ReadNumber(*opt, "rel_gap", "optimization", c.solver.rel_gap);
  ReadNumber(*opt, "integrality_tolerance", "optimization", c.solver.integrality_tolerance);
  ReadNumber(*opt, "feasibility_tolerance", "optimization", c.solver.feasibility_tolerance);

  if (const toml::table* t = SubTable(root, "metrics", "")) {
    CheckKeys(*t, "metrics", {"end_to_end_latency"});
    ReadBool(*t, "end_to_end_latency", "metrics", c.end_to_end_latency);
  }

  const toml::table* out = SubTable(root, "output", "");
  if (!out) throw ConfigError("missing required key output");
  CheckKeys(*out, "output", {"csv", "flows_jsonl"});
  std::string csv, flows;
  ReadString(*out, "csv", "output", csv);
  ReadString(*out, "flows_jsonl", "output", flows);
  c.csv_path = csv;
  c.flows_path = flows;

  c.Validate();
  return c;
}

ScenarioConfig LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseScenario(ss.str());
}

std::vector<GeoPoint> ResolveGnbSites(const ScenarioConfig& config) {
  if (!config.gnb_sites.empty()) return config.gnb_sites;
  std::vector<Vec3> sats = PropagateWalker(config.walker);
  std::seed_seq seq{static_cast<uint32_t>(config.gnb_placement_seed),
                    static_cast<uint32_t>(config.gnb_placement_seed >> 32)};
  std::mt19937_64 rng(seq);
  constexpr int kMaxDraws = 100000;
  std::vector<GeoPoint> sites;
  for (int j = 0; j < config.gnb_count; ++j) {
    bool placed = false;
    for (int draw = 0; draw < kMaxDraws && !placed; ++draw) {
      GeoPoint p;
      p.latitude_deg = std::asin(2 * UnitDraw(rng) - 1) * 180 / std::numbers::pi;
      p.longitude_deg = 360 * UnitDraw(rng) - 180;
      Vec3 pos = p.ToCartesian();
      for (const Vec3& s : sats) {
        if (ElevationDeg(pos, s) >= config.topology.min_elevation_deg) {
          placed = true;
          break;
        }
      }
      if (placed) sites.push_back(p);
    }
    if (!placed) throw ConfigError("gnbs.count: no site with a visible satellite was found");
  }
  return sites;
}

Topology BuildScenarioTopology(const ScenarioConfig& config) {
  std::vector<GeoPoint> gnbs = ResolveGnbSites(config);
  return BuildTopology(config.walker, config.ogs_sites, gnbs, config.topology);
}

// ---------------------------------------------------------------------------
// Sweep points

std::string SweepPoint::Key() const {
  return fmt::format("{},{},{},{}", condition, flows_per_ue, weights.w_flow, seed);
}

std::vector<SweepPoint> EnumeratePoints(const ScenarioConfig& config) {
  std::vector<SweepPoint> points;
  for (int cond : config.conditions) {
    for (int flows : config.flows_per_ue) {
      for (const WeightPair& w : config.weights) {
        for (uint64_t seed : config.seeds) points.push_back({cond, flows, w, seed});
      }
    }
  }
  return points;
}

SweepPoint ParsePoint(const std::string& text, const ScenarioConfig& config) {
  SweepPoint p;
  p.seed = config.seeds.empty() ? 0 : config.seeds.front();
  bool has_cond = false, has_flows = false, has_w = false;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    size_t eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("point: expected key=value, got '" + part + "'");
    std::string key = part.substr(0, eq), value = part.substr(eq + 1);
    try {
      if (key == "cond") {
        p.condition = std::stoi(value);
        has_cond = true;
      } else if (key == "flows") {
        p.flows_per_ue = std::stoi(value);
        has_flows = true;
      } else if (key == "w") {
        p.weights.w_flow = std::stod(value);
        p.weights.w_latency = 1 - p.weights.w_flow;
        has_w = true;
      } else if (key == "seed") {
        p.seed = std::stoull(value);
      } else {
        throw ConfigError("point: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("point: bad value for '" + key + "'");
    }
  }
  if (!has_cond || !has_flows || !has_w) throw ConfigError("point needs cond, flows and w");
  if (!config.mapping_tables.count(p.condition)) {
    throw ConfigError(fmt::format("point: unknown condition {}", p.condition));
  }
  if (p.flows_per_ue <= 0) throw ConfigError("point: flows must be > 0");
  if (!(p.weights.w_flow >= 0 && p.weights.w_flow <= 1)) throw ConfigError("point: w must be in [0, 1]");
  return p;
}

PointInstance BuildPointInstance(const ScenarioConfig& config, const Topology& topology,
                                 const SweepPoint& point) {
  PointInstance inst;
  const int num_gnbs = static_cast<int>(topology.gnbs().size());
  TrafficSpec spec{num_gnbs, config.ues_per_gnb, point.flows_per_ue,
                   config.demand_per_flow_bps, topology.ground_stations()};
  inst.flows = GenerateTraffic(spec, point.seed);

  const MappingCondition common = config.Condition(point.condition);
  const size_t per_gnb = static_cast<size_t>(config.ues_per_gnb) * point.flows_per_ue;
  for (int j = 0; j < num_gnbs; ++j) {
    auto it = config.gnb_mapping_overrides.find(j);
    const MappingCondition cond =
        it == config.gnb_mapping_overrides.end() ? common : config.Condition(it->second);
    std::optional<int> user = topology.UserLinkOf(topology.gnbs()[j]);
    if (!user) throw NoVisibleSatelliteError(j);
    std::span<const Flow5G> own(inst.flows.data() + j * per_gnb, per_gnb);
    GnbAggregate agg = AggregateAtGnb(own, cond, topology.link(*user).capacity_bps,
                                      static_cast<int>(inst.traffic.size()));
    if (agg.clipped) ++inst.clipped_gnbs;
    inst.traffic.insert(inst.traffic.end(), agg.traffic.begin(), agg.traffic.end());
  }

  std::vector<int> edges = AssignSliceEdges(topology);
  inst.slices = BuildSlices(inst.traffic, config.slice_policy, edges);

  inst.weights.w_flow = point.weights.w_flow;
  inst.weights.w_latency = point.weights.w_latency;
  inst.weights.flow_norm_bps = 0;
  inst.weights.latency_norm_s = 0;
  for (const Flow5G& f : inst.flows) {
    inst.weights.flow_norm_bps += f.demand_bps;
    inst.weights.latency_norm_s += PdbSeconds(f.five_qi);
  }
  return inst;
}

PointResult RunPoint(const ScenarioConfig& config, const Topology& topology,
                     const SweepPoint& point) {
  PointResult res;
  res.point = point;
  CsvRow& row = res.row;
  row.condition = point.condition;
  row.flows_per_ue = point.flows_per_ue;
  row.w_f = point.weights.w_flow;
  row.w_l = point.weights.w_latency;
  row.seed = point.seed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.sbar_f = row.sbar_l = row.J = row.J_flow_term = row.J_latency_term = nan;
  try {
    res.instance = BuildPointInstance(config, topology, point);
    const PointInstance& inst = res.instance;
    row.n_slices = static_cast<int>(inst.slices.size());
    MilpModel model = BuildModel(inst.slices, topology, inst.weights);
    row.n_binaries = model.problem().num_integer();
    res.solution = Solve(model, config.solver);
    const Solution& sol = res.solution;
    row.solve_time_s = sol.solve_time_s;
    row.status = ToString(sol.status);
    if (sol.has_incumbent) {
      res.violations = VerifySolution(inst.slices, topology, sol);
      if (!res.violations.empty()) {
        row.status = fmt::format("verify_failed({})", res.violations.size());
      }
    }
    res.outcomes = Redistribute(sol, inst.slices, inst.traffic, inst.flows, topology,
                                config.end_to_end_latency);
    Satisfaction sat = ComputeSatisfaction(res.outcomes);
    row.sbar_f = sat.sbar_f;
    row.sbar_l = sat.sbar_l;
    if (sol.has_incumbent) {
      CostBreakdown cost = EvaluateSolutionCost(sol, inst.slices, inst.weights);
      row.J = cost.total;
      row.J_flow_term = cost.flow_term;
      row.J_latency_term = cost.latency_term;
      res.objective_mismatch = std::abs(cost.total - sol.objective);
      if (res.objective_mismatch > 1e-6 && res.violations.empty()) {
        row.status = "objective_mismatch";
      }
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    row.status = std::string("error: ") + e.what();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Sweep

RunRecord RunSweep(const ScenarioConfig& config, const SweepOptions& options) {
  config.Validate();
  if (options.workers < 1) throw ConfigError("workers must be >= 1");
  const Topology topology = BuildScenarioTopology(config);
  const std::vector<SweepPoint> points = EnumeratePoints(config);

  RunRecord record;
  record.config_hash = config.HashHex();
  record.csv_path = config.csv_path;
  record.flows_path = config.flows_path;
  record.record_path = config.csv_path;
  record.record_path += ".run.json";

  std::map<std::string, size_t> index_of;
  for (size_t k = 0; k < points.size(); ++k) index_of[points[k].Key()] = k;

  // Completed rows from an earlier, possibly interrupted, run.
  std::vector<std::optional<CsvRow>> done(points.size());
  std::vector<std::string> kept_lines;
  if (options.resume && std::filesystem::exists(config.csv_path)) {
    std::optional<std::string> hash = RecordedHash(record.record_path);
    if (hash && *hash != record.config_hash) {
      throw ConfigError(fmt::format(
          "{} was written under config hash {}, current is {}; remove it or choose another "
          "output path",
          config.csv_path.string(), *hash, record.config_hash));
    }
    std::ifstream in(config.csv_path);
    std::string line;
    if (std::getline(in, line) && line != CsvHeader()) {
      throw ConfigError(config.csv_path.string() + " has an unexpected header");
    }
    if (!hash && std::getline(in, line)) {
      throw ConfigError(config.csv_path.string() + " has rows but no run record");
    }
    in.clear();
    while (std::getline(in, line)) {
      CsvRow row;
      try {
        row = ParseCsvRow(line);
      } catch (const std::invalid_argument&) {
        break;  // torn final line
      }
      auto it = index_of.find(row.Key());
      if (it == index_of.end() || done[it->second]) continue;
      done[it->second] = row;
      kept_lines.push_back(line);
      ++record.resumed;
    }
  }

  if (config.csv_path.has_parent_path()) {
    std::filesystem::create_directories(config.csv_path.parent_path());
  }
  WriteRecord(record.record_path, config, record);
  std::ofstream csv(config.csv_path, std::ios::trunc);
  if (!csv) throw std::ios_base::failure("cannot write " + config.csv_path.string());
  csv << CsvHeader() << "\n";
  for (const std::string& line : kept_lines) csv << line << "\n";
  csv.flush();
  std::ofstream flows_out;
  if (!config.flows_path.empty()) {
    if (config.flows_path.has_parent_path()) {
      std::filesystem::create_directories(config.flows_path.parent_path());
    }
    flows_out.open(config.flows_path, record.resumed > 0 ? std::ios::app : std::ios::trunc);
    if (!flows_out) throw std::ios_base::failure("cannot write " + config.flows_path.string());
  }

  std::vector<size_t> todo;
  for (size_t k = 0; k < points.size(); ++k) {
    if (!done[k]) todo.push_back(k);
  }

  std::mutex mu;
  std::condition_variable ready;
  std::vector<std::optional<PointResult>> results(todo.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t t = next++; t < todo.size(); t = next++) {
      PointResult r = RunPoint(config, topology, points[todo[t]]);
      std::lock_guard<std::mutex> lock(mu);
      results[t] = std::move(r);
      ready.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(options.workers, std::max<size_t>(todo.size(), 1));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);

  // Single writer: rows leave in sweep order.
  for (size_t t = 0; t < todo.size(); ++t) {
    PointResult r;
    {
      std::unique_lock<std::mutex> lock(mu);
      ready.wait(lock, [&] { return results[t].has_value(); });
      r = std::move(*results[t]);
      results[t].reset();
    }
    csv << FormatCsvRow(r.row) << "\n";
    csv.flush();
    if (flows_out.is_open() && r.error.empty()) {
      const PointInstance& inst = r.instance;
      std::map<int, int> nqi_of;
      for (const NtnTraffic& tr : inst.traffic) {
        for (int f : tr.flow_ids) nqi_of[f] = tr.nqi;
      }
      for (size_t k = 0; k < r.outcomes.size(); ++k) {
        flows_out << FlowDetailJson(r.row, r.outcomes[k], inst.flows[k],
                                    nqi_of.at(inst.flows[k].id))
                  << "\n";
      }
      flows_out.flush();
    }
    if (!options.quiet) {
      std::cerr << fmt::format("[{}/{}] cond={} flows={} w_f={} seed={} {} {:.2f}s\n", t + 1,
                               todo.size(), r.row.condition, r.row.flows_per_ue, r.row.w_f,
                               r.row.seed, r.row.status, r.row.solve_time_s);
    }
    done[todo[t]] = r.row;
    ++record.executed;
  }
  for (std::thread& th : pool) th.join();

  for (const auto& row : done) record.rows.push_back(*row);
  WriteRecord(record.record_path, config, record);
  return record;
}

}  // namespace ntnqos
