// include/eecn/engine.hpp
// Deterministic discrete-event core: event calendar ordered by
// (fire_time, sequence number), point-to-point links with serialization and
// propagation delay, hosts with plain FIFOs, routers with marking queues,
// and the two reference topologies.
//
// One SimWorld is one single-threaded run; everything it touches is owned by
// it, so independent runs can execute concurrently.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "eecn/errors.hpp"
#include "eecn/metrics.hpp"
#include "eecn/packet.hpp"
#include "eecn/queue.hpp"
#include "eecn/rng.hpp"
#include "eecn/scenario.hpp"
#include "eecn/sim_time.hpp"
#include "eecn/trace.hpp"
#include "eecn/transport.hpp"

namespace eecn {

class SimWorld {
 public:
  explicit SimWorld(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

  // Non-copyable; events capture indices into the world.
  SimWorld(const SimWorld&) = delete;
  SimWorld& operator=(const SimWorld&) = delete;

  TraceLog& trace() { return trace_; }
  const ScenarioConfig& config() const { return cfg_; }
  std::size_t node_count() const { return node_names_.size(); }
  std::size_t link_count() const { return links_; }
  const std::vector<std::string>& node_names() const { return node_names_; }
  MetricsCollector& metrics() { return metrics_; }
  std::vector<std::string>& router_names() { return router_names_; }

  // --- construction (used by the topology builders) -------------------------

  std::uint32_t add_node(const std::string& name, bool is_router) {
    for (const auto& n : node_names_)
      if (n == name) throw ConfigError("duplicate node id '" + name + "'");
    node_names_.push_back(name);
    is_router_.push_back(is_router);
    port_of_.emplace_back();
    return static_cast<std::uint32_t>(node_names_.size() - 1);
  }

  // Full-duplex link: one output port on each side.
  void add_link(std::uint32_t a, std::uint32_t b, const LinkSpec& link) {
    add_port(a, b, link);
    add_port(b, a, link);
    ++links_;
  }

  void add_connection(const FlowSpec& spec, std::uint32_t src, std::uint32_t dst) {
    const auto id = static_cast<std::uint32_t>(conns_.size());
    Conn c;
    c.spec = spec;
    c.initiator = std::make_unique<Endpoint>(id, Role::Initiator, spec.algo,
                                             spec.size_bytes, src, dst,
                                             spec.seg_size, cfg_.transport);
    c.responder = std::make_unique<Endpoint>(id, Role::Responder, spec.algo,
                                             std::uint64_t{0}, dst, src,
                                             spec.seg_size, cfg_.transport);
    c.initiator->set_trace(&trace_);
    c.responder->set_trace(&trace_);
    conns_.push_back(std::move(c));
    metrics_.register_flow(id, spec.flow_class(), spec.algo, spec.size_bytes);
  }

  void finalize_topology() {
    compute_routes();
    for (auto& p : ports_)
      if (p->aqm) metrics_.register_queue(p->id);
  }

  // --- simulation ------------------------------------------------------------

  SimReport run(SimTime duration = 0) {
    if (duration <= 0) duration = cfg_.duration;
    metrics_.set_steady_window(duration / 10, duration - duration / 10);

    SplitMix64 jitter_rng = seeded_stream(cfg_.seed, "flow-jitter");
    for (std::size_t i = 0; i < conns_.size(); ++i) {
      SimTime start = conns_[i].spec.start;
      if (conns_[i].spec.jitter > 0)
        start += static_cast<SimTime>(jitter_rng.next_below(
            static_cast<std::uint64_t>(conns_[i].spec.jitter)));
      schedule(start, [this, i] {
        metrics_.on_flow_start(static_cast<std::uint32_t>(i), now_);
        std::vector<Packet> out;
        conns_[i].initiator->start(now_, out);
        dispatch(out);
        sync_timer(i, Role::Initiator);
      });
    }
    if (sample_interval_ > 0 && !ports_.empty()) schedule_sample(0);

    while (!calendar_.empty()) {
      const Event& top = calendar_.top();
      if (top.t >= duration) break;
      if (top.t < now_)
        throw SimError("event time regression: " + std::to_string(top.t) +
                       " < " + std::to_string(now_));
      now_ = top.t;
      auto fn = std::move(const_cast<Event&>(top).fn);
      calendar_.pop();
      fn();
    }

    // Close the ledger: whatever is still queued or on a link is resident.
    std::uint64_t resident = transit_;
    for (const auto& p : ports_)
      resident += p->aqm ? p->aqm->occupancy() : p->plain.size();
    metrics_.ledger().resident = resident;

    for (std::size_t i = 0; i < conns_.size(); ++i) {
      auto merged = conns_[i].initiator->rtt_history();
      const auto& r = conns_[i].responder->rtt_history();
      merged.insert(merged.end(), r.begin(), r.end());
      std::sort(merged.begin(), merged.end());
      metrics_.set_flow_rtts(static_cast<std::uint32_t>(i), merged);
    }
    return summarize(metrics_, cfg_.name, cfg_.seed, duration);
  }

  SimTime now() const { return now_; }

  // Direct access for white-box tests.
  RouterQueue* queue_by_id(const std::string& id) {
    for (auto& p : ports_)
      if (p->aqm && p->id == id) return p->aqm.get();
    return nullptr;
  }
  Endpoint& initiator(std::size_t flow) { return *conns_.at(flow).initiator; }
  Endpoint& responder(std::size_t flow) { return *conns_.at(flow).responder; }
  std::uint64_t packets_in_transit() const { return transit_; }

 private:
  struct Event {
    SimTime t;
    std::uint64_t seq;
    mutable std::function<void()> fn;
    bool operator>(const Event& o) const {
      return t != o.t ? t > o.t : seq > o.seq;
    }
  };

  struct OutputPort {
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    LinkSpec link;
    std::unique_ptr<RouterQueue> aqm;  // routers only
    std::deque<Packet> plain;          // hosts: unbounded, no marking
    bool busy = false;
    SplitMix64 rng{0};
    std::string id;
  };

  struct Conn {
    FlowSpec spec;
    std::unique_ptr<Endpoint> initiator;
    std::unique_ptr<Endpoint> responder;
    bool completed = false;
    SimTime initiator_deadline = 0;
    SimTime responder_deadline = 0;
  };

  void add_port(std::uint32_t from, std::uint32_t to, const LinkSpec& link) {
    auto p = std::make_unique<OutputPort>();
    p->from = from;
    p->to = to;
    p->link = link;
    p->id = node_names_[from] + "->" + node_names_[to];
    if (is_router_[from]) {
      QueueConfig qc = cfg_.queue;
      qc.mode = router_mode(node_names_[from]);
      for (const auto& fm : cfg_.forced_marks)
        if (fm.router == node_names_[from])
          qc.forced_mark = ForcedMark{fm.level, fm.from, fm.until};
      p->aqm = std::make_unique<RouterQueue>(qc, p->id);
    }
    p->rng = seeded_stream(cfg_.seed, "red:" + p->id);
    port_of_[from][to] = ports_.size();
    ports_.push_back(std::move(p));
  }

  QueueMode router_mode(const std::string& name) const {
    if (cfg_.router_modes.empty()) return cfg_.queue.mode;
    for (std::size_t i = 0; i < router_names_.size(); ++i)
      if (router_names_[i] == name)
        return i < cfg_.router_modes.size() ? cfg_.router_modes[i]
                                            : cfg_.queue.mode;
    return cfg_.queue.mode;
  }

  void compute_routes() {
    const std::size_t n = node_names_.size();
    next_hop_.assign(n, std::vector<std::uint32_t>(n, kNoRoute));
    for (std::uint32_t dst = 0; dst < n; ++dst) {
      // BFS from dst; links are symmetric, so parents are next hops.
      std::vector<std::uint32_t> dist(n, kNoRoute);
      std::deque<std::uint32_t> work{dst};
      dist[dst] = 0;
      while (!work.empty()) {
        const std::uint32_t u = work.front();
        work.pop_front();
        for (const auto& [nb, port] : port_of_[u]) {
          (void)port;
          if (dist[nb] != kNoRoute) continue;
          dist[nb] = dist[u] + 1;
          next_hop_[nb][dst] = u;
          work.push_back(nb);
        }
      }
    }
  }

  void schedule(SimTime t, std::function<void()> fn) {
    calendar_.push(Event{t, event_seq_++, std::move(fn)});
  }

  void schedule_sample(SimTime t) {
    schedule(t, [this] {
      for (auto& p : ports_)
        if (p->aqm) metrics_.sample_queue(p->id, now_, p->aqm->occupancy());
      double total_cwnd = 0.0;
      for (auto& c : conns_)
        if (c.initiator->handshake_done() && !c.initiator->send_complete())
          total_cwnd += c.initiator->state().cwnd;
      metrics_.sample_cwnd_total(now_, total_cwnd);
      schedule_sample(now_ + sample_interval_);
    });
  }

  // Route one packet out of a node (or deliver it locally).
  void forward(std::uint32_t node, Packet p) {
    if (node == p.dst_node) {
      deliver(p);
      return;
    }
    const std::uint32_t next = next_hop_[node][p.dst_node];
    if (next == kNoRoute)
      throw SimError("no route from " + node_names_[node] + " to " +
                     node_names_[p.dst_node]);
    offer_port(port_of_[node].at(next), p);
  }

  void offer_port(std::size_t pi, Packet& p) {
    OutputPort& port = *ports_[pi];
    if (port.aqm) {
      RouterQueue::MarkOutcome mo;
      const auto verdict = port.aqm->offer(p, now_, port.rng, &trace_, &mo);
      if (verdict != RouterQueue::Verdict::Admitted) {
        metrics_.on_drop(p.flow, port.id,
                         verdict == RouterQueue::Verdict::DroppedTail, p);
        return;
      }
      metrics_.on_enqueue(port.id);
      if (mo.marked) metrics_.on_mark(p.flow, port.id, mo.stamped, p);
    } else {
      port.plain.push_back(p);
    }
    if (!port.busy) start_tx(pi);
  }

  void start_tx(std::size_t pi) {
    OutputPort& port = *ports_[pi];
    Packet p;
    if (port.aqm) {
      SimTime sojourn = 0;
      p = port.aqm->pop(now_, &trace_, &sojourn);
      metrics_.on_dequeue(port.id, sojourn);
    } else {
      p = port.plain.front();
      port.plain.pop_front();
    }
    port.busy = true;
    ++transit_;
    const SimTime tx = transmit_time(p.wire_size(), port.link.rate_bps);
    schedule(now_ + tx, [this, pi, p] {
      schedule(now_ + ports_[pi]->link.delay, [this, pi, p] {
        --transit_;
        forward(ports_[pi]->to, p);
      });
      OutputPort& done = *ports_[pi];
      const bool more = done.aqm ? !done.aqm->empty() : !done.plain.empty();
      if (more) start_tx(pi);
      else done.busy = false;
    });
  }

  void deliver(const Packet& p) {
    Conn& c = conns_.at(p.flow);
    metrics_.on_delivered(p.flow, p, now_);
    const bool to_initiator = c.initiator->self_node() == p.dst_node;
    Endpoint& ep = to_initiator ? *c.initiator : *c.responder;
    std::vector<Packet> out;
    ep.on_packet(p, now_, out);
    dispatch(out);
    sync_timer(p.flow, to_initiator ? Role::Initiator : Role::Responder);
    check_completion(p.flow);
  }

  void dispatch(std::vector<Packet>& out) {
    for (auto& p : out) {
      p.id = ++packet_seq_;
      metrics_.on_injected(p.flow, p);
      forward(p.src_node, p);
    }
    out.clear();
  }

  void check_completion(std::uint32_t f) {
    Conn& c = conns_[f];
    if (c.completed) return;
    const bool done = c.spec.size_bytes == 0
                          ? c.responder->handshake_done()
                          : c.responder->receive_complete(c.spec.size_bytes);
    if (done) {
      c.completed = true;
      metrics_.on_flow_complete(f, now_);
    }
  }

  void sync_timer(std::size_t ci, Role role) {
    Conn& c = conns_[ci];
    Endpoint& ep = role == Role::Initiator ? *c.initiator : *c.responder;
    SimTime& slot = role == Role::Initiator ? c.initiator_deadline
                                            : c.responder_deadline;
    const SimTime d = ep.rto_deadline();
    if (d == slot) return;
    slot = d;
    if (d <= 0) return;
    schedule(d, [this, ci, role, d] { fire_timer(ci, role, d); });
  }

  void fire_timer(std::size_t ci, Role role, SimTime d) {
    Conn& c = conns_[ci];
    Endpoint& ep = role == Role::Initiator ? *c.initiator : *c.responder;
    if (ep.rto_deadline() != d) return;  // re-armed or disarmed since
    std::vector<Packet> out;
    ep.on_timer(now_, out);
    dispatch(out);
    (role == Role::Initiator ? c.initiator_deadline : c.responder_deadline) = 0;
    sync_timer(ci, role);
  }

  static constexpr std::uint32_t kNoRoute = 0xffffffffu;

  ScenarioConfig cfg_;
  std::vector<std::string> node_names_;
  std::vector<bool> is_router_;
  std::vector<std::string> router_names_;
  std::vector<std::map<std::uint32_t, std::size_t>> port_of_;
  std::vector<std::unique_ptr<OutputPort>> ports_;
  std::size_t links_ = 0;
  std::vector<std::vector<std::uint32_t>> next_hop_;
  std::vector<Conn> conns_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> calendar_;
  std::uint64_t event_seq_ = 0;
  std::uint64_t packet_seq_ = 0;
  SimTime now_ = 0;
  std::uint64_t transit_ = 0;
  SimTime sample_interval_ = from_millis(10);

  MetricsCollector metrics_;
  TraceLog trace_;
};

// --- topology builders --------------------------------------------------------

inline void spawn_flows(SimWorld& w, const ScenarioConfig& cfg,
                        const std::map<std::string, std::uint32_t>& index) {
  for (const auto& f : cfg.flows)
    w.add_connection(f, index.at(f.src), index.at(f.dst));
}

inline void check_hosts(const ScenarioConfig& cfg) {
  if (cfg.clients.empty()) throw ConfigError("clients: need at least one");
  if (cfg.servers.empty()) throw ConfigError("servers: need at least one");
}

inline std::unique_ptr<SimWorld> build_dumbbell(const ScenarioConfig& cfg) {
  if (cfg.topology != Topology::Dumbbell)
    throw ConfigError("topology: build_dumbbell needs topology=dumbbell");
  if (!cfg.router_modes.empty() && cfg.router_modes.size() != 2)
    throw ConfigError("router_modes: dumbbell expects 2 entries");
  check_hosts(cfg);
  auto w = std::make_unique<SimWorld>(cfg);
  std::map<std::string, std::uint32_t> index;
  w->router_names() = {"r1", "r2"};
  for (const auto& c : cfg.clients) index[c] = w->add_node(c, false);
  const auto r1 = w->add_node("r1", true);
  const auto r2 = w->add_node("r2", true);
  for (const auto& s : cfg.servers) index[s] = w->add_node(s, false);
  for (const auto& c : cfg.clients) w->add_link(index[c], r1, cfg.edge);
  w->add_link(r1, r2, cfg.bottleneck);
  for (const auto& s : cfg.servers) w->add_link(r2, index[s], cfg.edge);
  spawn_flows(*w, cfg, index);
  w->finalize_topology();
  return w;
}

inline std::unique_ptr<SimWorld> build_multihop(const ScenarioConfig& cfg) {
  if (cfg.topology != Topology::MultiHop)
    throw ConfigError("topology: build_multihop needs topology=multihop");
  if (!cfg.router_modes.empty() && cfg.router_modes.size() != 3)
    throw ConfigError("router_modes: multihop expects 3 entries");
  check_hosts(cfg);
  ScenarioConfig c2 = cfg;
  if (c2.router_modes.empty())
    c2.router_modes = {QueueMode::Eecn, QueueMode::Ecn, QueueMode::Eecn};
  auto w = std::make_unique<SimWorld>(c2);
  std::map<std::string, std::uint32_t> index;
  w->router_names() = {"r1", "r2", "r3"};
  for (const auto& c : c2.clients) index[c] = w->add_node(c, false);
  const auto r1 = w->add_node("r1", true);
  const auto r2 = w->add_node("r2", true);
  const auto r3 = w->add_node("r3", true);
  for (const auto& s : c2.servers) index[s] = w->add_node(s, false);
  for (const auto& c : c2.clients) w->add_link(index[c], r1, c2.edge);
  w->add_link(r1, r2, c2.bottleneck);
  w->add_link(r2, r3, c2.bottleneck);
  for (const auto& s : c2.servers) w->add_link(r3, index[s], c2.edge);
  spawn_flows(*w, c2, index);
  w->finalize_topology();
  return w;
}

inline std::unique_ptr<SimWorld> build_world(const ScenarioConfig& cfg) {
  return cfg.topology == Topology::Dumbbell ? build_dumbbell(cfg)
                                            : build_multihop(cfg);
}

}  // namespace eecn
