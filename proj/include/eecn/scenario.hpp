// include/eecn/scenario.hpp
// Scenario files: JSON in, validated ScenarioConfig out. Every file must
// carry schema_version = 1. Validation errors name the offending field.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eecn/errors.hpp"
#include "eecn/packet.hpp"
#include "eecn/queue.hpp"
#include "eecn/sim_time.hpp"
#include "eecn/transport.hpp"

namespace eecn {

inline constexpr int kScenarioSchemaVersion = 1;

enum class Topology : std::uint8_t { Dumbbell, MultiHop };

struct LinkSpec {
  double rate_bps = 1e9;
  SimTime delay = from_millis(1);
};

struct FlowSpec {
  CcAlgo algo = CcAlgo::Eecn;
  std::string src;
  std::string dst;
  std::uint64_t size_bytes = 0;
  SimTime start = 0;
  SimTime jitter = 0;  // uniform extra start delay in [0, jitter)
  std::uint32_t seg_size = 1000;
  std::optional<FlowClass> cls;  // derived from size when absent

  FlowClass flow_class() const {
    if (cls) return *cls;
    return size_bytes < 100'000 ? FlowClass::Short : FlowClass::Elephant;
  }
};

struct ForcedMarkSpec {
  std::string router;
  CongestionLevel level = CongestionLevel::CL1;
  SimTime from = 0;
  SimTime until = 0;
};

struct ScenarioConfig {
  std::string name;
  Topology topology = Topology::Dumbbell;
  std::uint64_t seed = 1;
  SimTime duration = from_millis(60'000);

  std::vector<std::string> clients{"c1", "c2", "c3"};
  std::vector<std::string> servers{"s1", "s2", "s3"};

  LinkSpec edge{1e9, from_millis(1)};
  LinkSpec bottleneck{1e8, from_millis(5)};

  QueueConfig queue;                                 // template for routers
  std::vector<QueueMode> router_modes;               // per router, optional
  std::vector<ForcedMarkSpec> forced_marks;

  TransportConfig transport;
  std::vector<FlowSpec> flows;
};

// --- helpers ---------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline const json& need(const json& j, const std::string& key,
                        const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + key + ": missing required field");
  return *it;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback,
         const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

inline double positive(double v, const std::string& path) {
  if (!(v > 0)) throw ConfigError(path + ": must be positive");
  return v;
}

inline CcAlgo parse_algo(const std::string& s, const std::string& path) {
  if (s == "eecn") return CcAlgo::Eecn;
  if (s == "newreno") return CcAlgo::NewReno;
  if (s == "ecn") return CcAlgo::NewRenoEcn;
  throw ConfigError(path + ": unknown algorithm '" + s +
                    "' (expected eecn|ecn|newreno)");
}

inline QueueMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "ecn") return QueueMode::Ecn;
  if (s == "eecn") return QueueMode::Eecn;
  throw ConfigError(path + ": unknown queue mode '" + s + "'");
}

inline CongestionLevel parse_level(const std::string& s, const std::string& path) {
  if (s == "cl1" || s == "CL1") return CongestionLevel::CL1;
  if (s == "cl2" || s == "CL2") return CongestionLevel::CL2;
  throw ConfigError(path + ": unknown congestion level '" + s + "'");
}

inline std::vector<std::string> parse_node_list(const json& j,
                                                const std::string& key,
                                                char prefix,
                                                std::vector<std::string> fallback,
                                                const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  std::vector<std::string> names;
  if (it->is_number_integer()) {
    const int n = it->get<int>();
    if (n <= 0) throw ConfigError(path + key + ": must be at least 1");
    for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
  }
  if (!it->is_array()) throw ConfigError(path + key + ": expected count or array");
  for (const auto& e : *it) names.push_back(e.get<std::string>());
  if (names.empty()) throw ConfigError(path + key + ": must name at least one node");
  return names;
}

inline LinkSpec parse_link(const json& j, LinkSpec dflt, const std::string& path) {
  LinkSpec l = dflt;
  l.rate_bps = positive(get_or(j, "rate_bps", l.rate_bps, path), path + "rate_bps");
  l.delay = from_seconds(
      positive(get_or(j, "delay_s", to_seconds(l.delay), path), path + "delay_s"));
  return l;
}

}  // namespace detail

// --- parsing ---------------------------------------------------------------

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  using detail::get_or;
  using detail::need;

  if (!j.is_object()) throw ConfigError("scenario: root must be an object");
  const int version = need(j, "schema_version", "").get<int>();
  if (version != kScenarioSchemaVersion)
    throw ConfigError("schema_version: unsupported version " +
                      std::to_string(version));

  ScenarioConfig cfg;
  cfg.name = get_or<std::string>(j, "name", "", "");

  const std::string topo = need(j, "topology", "").get<std::string>();
  if (topo == "dumbbell") cfg.topology = Topology::Dumbbell;
  else if (topo == "multihop") cfg.topology = Topology::MultiHop;
  else throw ConfigError("topology: expected dumbbell|multihop, got '" + topo + "'");

  cfg.seed = get_or<std::uint64_t>(j, "seed", 1, "");
  cfg.duration = from_seconds(
      detail::positive(get_or(j, "duration_s", 60.0, ""), "duration_s"));

  cfg.clients = detail::parse_node_list(j, "clients", 'c', cfg.clients, "");
  cfg.servers = detail::parse_node_list(j, "servers", 's', cfg.servers, "");

  if (auto it = j.find("edge"); it != j.end())
    cfg.edge = detail::parse_link(*it, cfg.edge, "edge.");
  if (auto it = j.find("bottleneck"); it != j.end())
    cfg.bottleneck = detail::parse_link(*it, cfg.bottleneck, "bottleneck.");

  if (auto it = j.find("queue"); it != j.end()) {
    const auto& q = *it;
    cfg.queue.capacity = get_or(q, "capacity_pkts", cfg.queue.capacity, "queue.");
    cfg.queue.th1 = get_or(q, "th1", cfg.queue.th1, "queue.");
    cfg.queue.th2 = get_or(q, "th2", cfg.queue.th2, "queue.");
    cfg.queue.red_min = get_or(q, "red_min", cfg.queue.red_min, "queue.");
    cfg.queue.red_max = get_or(q, "red_max", cfg.queue.red_max, "queue.");
    cfg.queue.red_max_p = get_or(q, "red_max_p", cfg.queue.red_max_p, "queue.");
    cfg.queue.red_qw = get_or(q, "red_qw", cfg.queue.red_qw, "queue.");
    cfg.queue.epoch = from_seconds(detail::positive(
        get_or(q, "epoch_s", to_seconds(cfg.queue.epoch), "queue."), "queue.epoch_s"));
    if (auto m = q.find("mode"); m != q.end())
      cfg.queue.mode = detail::parse_mode(m->get<std::string>(), "queue.mode");
    if (cfg.queue.capacity <= 0)
      throw ConfigError("queue.capacity_pkts: must be positive");
    if (cfg.queue.th1 >= cfg.queue.th2)
      throw ConfigError("queue.th1: must be < queue.th2");
  }

  if (auto it = j.find("router_modes"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i)
      cfg.router_modes.push_back(detail::parse_mode(
          (*it)[i].get<std::string>(), "router_modes[" + std::to_string(i) + "]"));
  }

  if (auto it = j.find("transport"); it != j.end()) {
    const auto& t = *it;
    auto& tc = cfg.transport;
    tc.d = get_or(t, "d", tc.d, "transport.");
    tc.sigma_ss = get_or(t, "sigma_ss", tc.sigma_ss, "transport.");
    tc.sigma_ca = get_or(t, "sigma_ca", tc.sigma_ca, "transport.");
    tc.avg_rtt_running_mean =
        get_or(t, "avg_rtt_running_mean", tc.avg_rtt_running_mean, "transport.");
    tc.avg_rtt_gain = get_or(t, "avg_rtt_gain", tc.avg_rtt_gain, "transport.");
    tc.ca_decay_once_per_rtt =
        get_or(t, "ca_decay_once_per_rtt", tc.ca_decay_once_per_rtt, "transport.");
    tc.reaction_window_rtts =
        get_or(t, "reaction_window_rtts", tc.reaction_window_rtts, "transport.");
    tc.init_rto_s = get_or(t, "init_rto_s", tc.init_rto_s, "transport.");
    tc.min_rto_s = get_or(t, "min_rto_s", tc.min_rto_s, "transport.");
    if (!(tc.sigma_ss > 0 && tc.sigma_ss <= 1))
      throw ConfigError("transport.sigma_ss: must be in (0,1]");
    if (!(tc.sigma_ca > 0 && tc.sigma_ca <= 1))
      throw ConfigError("transport.sigma_ca: must be in (0,1]");
    if (!(tc.d > 1)) throw ConfigError("transport.d: must be greater than 1");
  }

  // Node-name sanity before flows reference them.
  std::set<std::string> names;
  auto check_unique = [&](const std::vector<std::string>& v, const std::string& path) {
    for (const auto& n : v)
      if (!names.insert(n).second)
        throw ConfigError(path + ": duplicate node id '" + n + "'");
  };
  check_unique(cfg.clients, "clients");
  check_unique(cfg.servers, "servers");

  const auto& flows = need(j, "flows", "");
  if (!flows.is_array()) throw ConfigError("flows: expected an array");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string path = "flows[" + std::to_string(i) + "].";
    const auto& f = flows[i];
    FlowSpec fs;
    fs.algo = detail::parse_algo(need(f, "algo", path).get<std::string>(), path + "algo");
    fs.src = need(f, "src", path).get<std::string>();
    fs.dst = need(f, "dst", path).get<std::string>();
    fs.size_bytes = need(f, "size_bytes", path).get<std::uint64_t>();
    fs.start = from_seconds(get_or(f, "start_s", 0.0, path));
    fs.jitter = from_seconds(get_or(f, "jitter_s", 0.0, path));
    fs.seg_size = get_or<std::uint32_t>(f, "seg_size", 1000, path);
    if (fs.seg_size == 0) throw ConfigError(path + "seg_size: must be positive");
    if (auto c = f.find("class"); c != f.end()) {
      const std::string s = c->get<std::string>();
      if (s == "elephant") fs.cls = FlowClass::Elephant;
      else if (s == "short") fs.cls = FlowClass::Short;
      else throw ConfigError(path + "class: expected elephant|short");
    }
    if (!names.count(fs.src))
      throw ConfigError(path + "src: unknown node '" + fs.src + "'");
    if (!names.count(fs.dst))
      throw ConfigError(path + "dst: unknown node '" + fs.dst + "'");
    if (fs.src == fs.dst) throw ConfigError(path + "dst: must differ from src");
    cfg.flows.push_back(fs);
  }

  if (auto it = j.find("forced_marks"); it != j.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "forced_marks[" + std::to_string(i) + "].";
      const auto& m = (*it)[i];
      ForcedMarkSpec fm;
      fm.router = need(m, "router", path).get<std::string>();
      fm.level = detail::parse_level(need(m, "level", path).get<std::string>(),
                                     path + "level");
      fm.from = from_seconds(get_or(m, "from_s", 0.0, path));
      fm.until = from_seconds(get_or(m, "until_s", 0.0, path));
      cfg.forced_marks.push_back(fm);
    }
  }

  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ConfigError("scenario file not found: " + file_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario file " + file_path + ": " + e.what());
  }
  ScenarioConfig cfg = parse_scenario(j);
  if (cfg.name.empty()) cfg.name = file_path;
  return cfg;
}

}  // namespace eecn
