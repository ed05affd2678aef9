// include/eecn/metrics.hpp
// Run measurement: per-flow and per-queue statistics, fairness, report
// assembly and JSON/CSV export.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eecn/codepoint.hpp"
#include "eecn/errors.hpp"
#include "eecn/packet.hpp"
#include "eecn/scenario.hpp"
#include "eecn/sim_time.hpp"

namespace eecn {

// Jain's index: (sum x)^2 / (n * sum x^2), in (0, 1]. All-zero input has no
// defined value and is rejected.
inline double jain_fairness(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("jain_fairness: empty input");
  double sum = 0.0, sum_sq = 0.0;
  for (double x : xs) {
    if (x < 0) throw ConfigError("jain_fairness: negative throughput");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) throw ConfigError("jain_fairness: all-zero input");
  return sum * sum / (static_cast<double>(xs.size()) * sum_sq);
}

struct FlowStats {
  std::uint32_t flow_id = 0;
  FlowClass cls = FlowClass::Short;
  CcAlgo algo = CcAlgo::Eecn;
  std::uint64_t size_bytes = 0;
  bool completed = false;

  SimTime start = 0;
  SimTime end = 0;
  double fct_s = 0.0;
  double goodput_bps = 0.0;

  std::vector<std::pair<SimTime, double>> rtt_series;
  double mean_rtt_s = 0.0;
  double jitter_s = 0.0;  // mean |successive RTT difference|

  std::vector<double> e2e_delays_s;  // receive - first send, per data packet
  double mean_e2e_delay_s = 0.0;

  std::uint64_t packets_sent = 0;  // data + control + retransmissions
  std::uint64_t bytes_sent = 0;    // wire bytes injected
  std::uint64_t drops = 0;
  std::uint64_t dropped_bytes = 0;
  std::uint64_t marks_cl1 = 0;
  std::uint64_t marks_cl2 = 0;
  std::uint64_t marked_bytes = 0;

  // Steady-window accounting for fairness.
  std::uint64_t window_bytes = 0;
};

struct QueueStats {
  std::string queue_id;
  std::uint64_t enqueued = 0;
  std::uint64_t dequeued = 0;
  std::uint64_t drops_tail = 0;
  std::uint64_t drops_red = 0;
  std::uint64_t marks_cl1 = 0;
  std::uint64_t marks_cl2 = 0;
  double mean_sojourn_s = 0.0;
  std::uint64_t sojourn_count = 0;
  double sojourn_total_s = 0.0;
  std::vector<double> sojourn_times_s;
  std::size_t max_occupancy = 0;
  std::vector<std::pair<SimTime, std::size_t>> occupancy_series;
};

// End-of-run packet ledger; conservation must close exactly.
struct RunLedger {
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t resident = 0;  // still queued or on a link at cutoff
};

struct SimReport {
  std::string scenario;
  std::uint64_t seed = 0;
  double duration_s = 0.0;

  std::uint64_t packets_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_dropped = 0;
  std::uint64_t bytes_dropped = 0;
  std::uint64_t packets_marked = 0;
  std::uint64_t bytes_marked = 0;
  std::uint64_t marks_cl1 = 0;
  std::uint64_t marks_cl2 = 0;
  double drop_pct = 0.0;  // drops / packets sent * 100

  std::vector<FlowStats> flows;
  std::vector<QueueStats> queues;
  RunLedger ledger;

  double jain_goodput = 0.0;       // over completed flows' goodput
  double jain_steady = 0.0;        // over steady-window throughput
  double steady_window_s[2] = {0.0, 0.0};

  // Per-class means (elephant / short).
  double mean_fct_s[2] = {0.0, 0.0};
  double mean_goodput_bps[2] = {0.0, 0.0};
  double mean_e2e_delay_s[2] = {0.0, 0.0};

  std::vector<std::pair<SimTime, double>> cwnd_series_total;  // sum over senders
};

// ---------------------------------------------------------------------------

class MetricsCollector {
 public:
  MetricsCollector() = default;

  void register_flow(std::uint32_t id, FlowClass cls, CcAlgo algo,
                     std::uint64_t size) {
    if (flows_.size() <= id) flows_.resize(id + 1);
    flows_[id].flow_id = id;
    flows_[id].cls = cls;
    flows_[id].algo = algo;
    flows_[id].size_bytes = size;
  }

  void register_queue(const std::string& id) {
    queue_index_[id] = queues_.size();
    queues_.push_back({});
    queues_.back().queue_id = id;
  }

  void set_steady_window(SimTime w0, SimTime w1) {
    window_[0] = w0;
    window_[1] = w1;
  }

  void on_flow_start(std::uint32_t f, SimTime t) { flows_.at(f).start = t; }

  void on_injected(std::uint32_t f, const Packet& p) {
    ++ledger_.injected;
    auto& fs = flows_.at(f);
    ++fs.packets_sent;
    fs.bytes_sent += p.wire_size();
  }

  void on_delivered(std::uint32_t f, const Packet& p, SimTime now) {
    ++ledger_.delivered;
    auto& fs = flows_.at(f);
    if (p.is_data()) {
      fs.e2e_delays_s.push_back(to_seconds(now - p.first_sent));
      if (now >= window_[0] && now < window_[1]) fs.window_bytes += p.payload;
    }
  }

  void on_drop(std::uint32_t f, const std::string& queue_id, bool tail,
               const Packet& p) {
    ++ledger_.dropped;
    auto& fs = flows_.at(f);
    ++fs.drops;
    fs.dropped_bytes += p.wire_size();
    auto& qs = queues_.at(queue_index_.at(queue_id));
    if (tail) ++qs.drops_tail; else ++qs.drops_red;
  }

  void on_mark(std::uint32_t f, const std::string& queue_id,
               CongestionLevel level, const Packet& p) {
    auto& fs = flows_.at(f);
    if (level == CongestionLevel::CL2) ++fs.marks_cl2; else ++fs.marks_cl1;
    fs.marked_bytes += p.wire_size();
    auto& qs = queues_.at(queue_index_.at(queue_id));
    if (level == CongestionLevel::CL2) ++qs.marks_cl2; else ++qs.marks_cl1;
  }

  void on_enqueue(const std::string& queue_id) {
    ++queues_.at(queue_index_.at(queue_id)).enqueued;
  }

  void on_dequeue(const std::string& queue_id, SimTime sojourn) {
    auto& qs = queues_.at(queue_index_.at(queue_id));
    ++qs.dequeued;
    ++qs.sojourn_count;
    qs.sojourn_total_s += to_seconds(sojourn);
    qs.sojourn_times_s.push_back(to_seconds(sojourn));
  }

  void on_flow_complete(std::uint32_t f, SimTime now) {
    auto& fs = flows_.at(f);
    if (fs.completed) return;
    fs.completed = true;
    fs.end = now;
  }

  void sample_queue(const std::string& queue_id, SimTime t, std::size_t occ) {
    auto& qs = queues_.at(queue_index_.at(queue_id));
    qs.occupancy_series.push_back({t, occ});
    qs.max_occupancy = std::max(qs.max_occupancy, occ);
  }

  void sample_cwnd_total(SimTime t, double total) {
    cwnd_series_.push_back({t, total});
  }

  void set_flow_rtts(std::uint32_t f,
                     const std::vector<std::pair<SimTime, double>>& series) {
    flows_.at(f).rtt_series = series;
  }

  RunLedger& ledger() { return ledger_; }
  const std::vector<FlowStats>& flows() const { return flows_; }
  std::vector<FlowStats>& flows() { return flows_; }
  std::vector<QueueStats>& queues() { return queues_; }
  const std::vector<std::pair<SimTime, double>>& cwnd_series() const {
    return cwnd_series_;
  }
  SimTime window0() const { return window_[0]; }
  SimTime window1() const { return window_[1]; }

 private:
  std::vector<FlowStats> flows_;
  std::vector<QueueStats> queues_;
  std::map<std::string, std::size_t> queue_index_;
  std::vector<std::pair<SimTime, double>> cwnd_series_;
  RunLedger ledger_;
  SimTime window_[2] = {0, 0};
};

// ---------------------------------------------------------------------------

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  return v[idx];
}

inline SimReport summarize(MetricsCollector& mc, const std::string& scenario,
                           std::uint64_t seed, SimTime duration) {
  SimReport r;
  r.scenario = scenario;
  r.seed = seed;
  r.duration_s = to_seconds(duration);
  r.ledger = mc.ledger();

  for (auto& fs : mc.flows()) {
    if (fs.completed) {
      fs.fct_s = to_seconds(fs.end - fs.start);
      if (fs.fct_s > 0)
        fs.goodput_bps = static_cast<double>(fs.size_bytes) * 8.0 / fs.fct_s;
    }
    if (!fs.rtt_series.empty()) {
      double sum = 0.0;
      for (auto& [t, v] : fs.rtt_series) sum += v;
      fs.mean_rtt_s = sum / static_cast<double>(fs.rtt_series.size());
      if (fs.rtt_series.size() > 1) {
        double jsum = 0.0;
        for (std::size_t i = 1; i < fs.rtt_series.size(); ++i)
          jsum += std::abs(fs.rtt_series[i].second - fs.rtt_series[i - 1].second);
        fs.jitter_s = jsum / static_cast<double>(fs.rtt_series.size() - 1);
      }
    }
    fs.mean_e2e_delay_s = mean_of(fs.e2e_delays_s);

    r.packets_sent += fs.packets_sent;
    r.bytes_sent += fs.bytes_sent;
    r.packets_dropped += fs.drops;
    r.bytes_dropped += fs.dropped_bytes;
    r.marks_cl1 += fs.marks_cl1;
    r.marks_cl2 += fs.marks_cl2;
    r.bytes_marked += fs.marked_bytes;
  }
  r.packets_marked = r.marks_cl1 + r.marks_cl2;
  r.packets_delivered = r.ledger.delivered;
  if (r.packets_sent > 0)
    r.drop_pct = 100.0 * static_cast<double>(r.packets_dropped) /
                 static_cast<double>(r.packets_sent);

  for (auto& qs : mc.queues()) {
    if (qs.sojourn_count > 0)
      qs.mean_sojourn_s = qs.sojourn_total_s / static_cast<double>(qs.sojourn_count);
  }
  r.queues = mc.queues();
  r.flows = mc.flows();
  r.cwnd_series_total = mc.cwnd_series();
  r.steady_window_s[0] = to_seconds(mc.window0());
  r.steady_window_s[1] = to_seconds(mc.window1());

  // Per-class means over completed flows.
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<double> fct, gp, delay;
    for (const auto& fs : r.flows) {
      if (static_cast<int>(fs.cls) != cls || !fs.completed) continue;
      fct.push_back(fs.fct_s);
      gp.push_back(fs.goodput_bps);
      delay.push_back(fs.mean_e2e_delay_s);
    }
    r.mean_fct_s[cls] = mean_of(fct);
    r.mean_goodput_bps[cls] = mean_of(gp);
    r.mean_e2e_delay_s[cls] = mean_of(delay);
  }

  std::vector<double> goodputs;
  for (const auto& fs : r.flows)
    if (fs.completed && fs.goodput_bps > 0) goodputs.push_back(fs.goodput_bps);
  if (!goodputs.empty() &&
      std::any_of(goodputs.begin(), goodputs.end(), [](double g) { return g > 0; }))
    r.jain_goodput = jain_fairness(goodputs);

  const double wlen = to_seconds(mc.window1() - mc.window0());
  if (wlen > 0) {
    std::vector<double> rates;
    for (const auto& fs : r.flows)
      if (fs.window_bytes > 0)
        rates.push_back(static_cast<double>(fs.window_bytes) * 8.0 / wlen);
    if (!rates.empty()) r.jain_steady = jain_fairness(rates);
  }
  return r;
}

// --- export ----------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline nlohmann::json report_to_json(const SimReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["duration_s"] = r.duration_s;
  j["totals"] = {
      {"packets_sent", r.packets_sent},
      {"bytes_sent", r.bytes_sent},
      {"packets_delivered", r.packets_delivered},
      {"packets_dropped", r.packets_dropped},
      {"bytes_dropped", r.bytes_dropped},
      {"packets_marked", r.packets_marked},
      {"bytes_marked", r.bytes_marked},
      {"marks_cl1", r.marks_cl1},
      {"marks_cl2", r.marks_cl2},
      {"drop_pct", r.drop_pct},
  };
  j["ledger"] = {
      {"injected", r.ledger.injected},
      {"delivered", r.ledger.delivered},
      {"dropped", r.ledger.dropped},
      {"resident", r.ledger.resident},
  };
  j["fairness"] = {
      {"jain_goodput", r.jain_goodput},
      {"jain_steady", r.jain_steady},
      {"window_s", {r.steady_window_s[0], r.steady_window_s[1]}},
  };
  j["class_means"] = {
      {"elephant",
       {{"fct_s", r.mean_fct_s[0]},
        {"goodput_bps", r.mean_goodput_bps[0]},
        {"e2e_delay_s", r.mean_e2e_delay_s[0]}}},
      {"short",
       {{"fct_s", r.mean_fct_s[1]},
        {"goodput_bps", r.mean_goodput_bps[1]},
        {"e2e_delay_s", r.mean_e2e_delay_s[1]}}},
  };
  j["flows"] = nlohmann::json::array();
  for (const auto& f : r.flows) {
    j["flows"].push_back({
        {"id", f.flow_id},
        {"class", to_string(f.cls)},
        {"algo", to_string(f.algo)},
        {"size_bytes", f.size_bytes},
        {"completed", f.completed},
        {"fct_s", f.fct_s},
        {"goodput_bps", f.goodput_bps},
        {"mean_rtt_s", f.mean_rtt_s},
        {"jitter_s", f.jitter_s},
        {"mean_e2e_delay_s", f.mean_e2e_delay_s},
        {"packets_sent", f.packets_sent},
        {"drops", f.drops},
        {"marks_cl1", f.marks_cl1},
        {"marks_cl2", f.marks_cl2},
    });
  }
  j["queues"] = nlohmann::json::array();
  for (const auto& q : r.queues) {
    j["queues"].push_back({
        {"id", q.queue_id},
        {"enqueued", q.enqueued},
        {"dequeued", q.dequeued},
        {"drops_tail", q.drops_tail},
        {"drops_red", q.drops_red},
        {"marks_cl1", q.marks_cl1},
        {"marks_cl2", q.marks_cl2},
        {"mean_sojourn_s", q.mean_sojourn_s},
        {"sojourn_p50_s", percentile(q.sojourn_times_s, 0.50)},
        {"sojourn_p90_s", percentile(q.sojourn_times_s, 0.90)},
        {"sojourn_p99_s", percentile(q.sojourn_times_s, 0.99)},
        {"max_occupancy", q.max_occupancy},
    });
  }
  // 10 ms sampled series, for plotting queue and window dynamics.
  j["series"] = nlohmann::json::object();
  j["series"]["cwnd_total"] = nlohmann::json::array();
  for (const auto& [t, v] : r.cwnd_series_total)
    j["series"]["cwnd_total"].push_back({to_seconds(t), v});
  j["series"]["queue_occupancy"] = nlohmann::json::object();
  for (const auto& q : r.queues) {
    if (q.occupancy_series.empty()) continue;
    // Only queues that ever held a packet are worth plotting.
    bool active = q.enqueued > 0;
    if (!active) continue;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [t, occ] : q.occupancy_series)
      arr.push_back({to_seconds(t), occ});
    j["series"]["queue_occupancy"][q.queue_id] = std::move(arr);
  }
  return j;
}

// Flat CSV rendering of the same numbers: scope,id,metric,value.
inline void report_to_csv(const SimReport& r, std::ostream& os) {
  os << "scope,id,metric,value\n";
  auto row = [&os](const std::string& scope, const std::string& id,
                   const std::string& metric, const std::string& value) {
    os << scope << ',' << id << ',' << metric << ',' << value << '\n';
  };
  auto num = [&row](const std::string& scope, const std::string& id,
                    const std::string& metric, double v) {
    row(scope, id, metric, format_g17(v));
  };
  num("totals", "", "packets_sent", static_cast<double>(r.packets_sent));
  num("totals", "", "bytes_sent", static_cast<double>(r.bytes_sent));
  num("totals", "", "packets_delivered", static_cast<double>(r.packets_delivered));
  num("totals", "", "packets_dropped", static_cast<double>(r.packets_dropped));
  num("totals", "", "bytes_dropped", static_cast<double>(r.bytes_dropped));
  num("totals", "", "packets_marked", static_cast<double>(r.packets_marked));
  num("totals", "", "bytes_marked", static_cast<double>(r.bytes_marked));
  num("totals", "", "marks_cl1", static_cast<double>(r.marks_cl1));
  num("totals", "", "marks_cl2", static_cast<double>(r.marks_cl2));
  num("totals", "", "drop_pct", r.drop_pct);
  num("fairness", "", "jain_goodput", r.jain_goodput);
  num("fairness", "", "jain_steady", r.jain_steady);
  for (int cls = 0; cls < 2; ++cls) {
    const std::string id = cls == 0 ? "elephant" : "short";
    num("class", id, "fct_s", r.mean_fct_s[cls]);
    num("class", id, "goodput_bps", r.mean_goodput_bps[cls]);
    num("class", id, "e2e_delay_s", r.mean_e2e_delay_s[cls]);
  }
  for (const auto& f : r.flows) {
    const std::string id = std::to_string(f.flow_id);
    num("flow", id, "fct_s", f.fct_s);
    num("flow", id, "goodput_bps", f.goodput_bps);
    num("flow", id, "mean_rtt_s", f.mean_rtt_s);
    num("flow", id, "jitter_s", f.jitter_s);
    num("flow", id, "mean_e2e_delay_s", f.mean_e2e_delay_s);
    num("flow", id, "drops", static_cast<double>(f.drops));
    num("flow", id, "marks_cl1", static_cast<double>(f.marks_cl1));
    num("flow", id, "marks_cl2", static_cast<double>(f.marks_cl2));
  }
  for (const auto& q : r.queues) {
    num("queue", q.queue_id, "drops_tail", static_cast<double>(q.drops_tail));
    num("queue", q.queue_id, "drops_red", static_cast<double>(q.drops_red));
    num("queue", q.queue_id, "marks_cl1", static_cast<double>(q.marks_cl1));
    num("queue", q.queue_id, "marks_cl2", static_cast<double>(q.marks_cl2));
    num("queue", q.queue_id, "mean_sojourn_s", q.mean_sojourn_s);
    num("queue", q.queue_id, "max_occupancy", static_cast<double>(q.max_occupancy));
  }
}

}  // namespace eecn
