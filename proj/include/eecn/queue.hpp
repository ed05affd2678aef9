// include/eecn/queue.hpp
// Bounded FIFO router queue with two marking modes:
//
//   Eecn — markable packets are stamped CL1/CL2 from a congestion-level
//          estimate (occupancy plus the rate-delta over a 100 ms window,
//          normalized by capacity) and are never dropped early; only
//          unmarkable traffic is subject to RED.
//   Ecn  — classic single-bit behavior: RED stamps CE on markable packets
//          (all the way up to the tail) and drops unmarkable ones.
//
// Tail drop applies at capacity in both modes. A packet's level can only go
// up while it crosses queues, never down.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "eecn/codepoint.hpp"
#include "eecn/errors.hpp"
#include "eecn/packet.hpp"
#include "eecn/rng.hpp"
#include "eecn/sim_time.hpp"
#include "eecn/trace.hpp"

namespace eecn {

enum class QueueMode : std::uint8_t { Ecn, Eecn };

constexpr const char* to_string(QueueMode m) {
  return m == QueueMode::Ecn ? "ecn" : "eecn";
}

// Scripted marking override, active in [from, until). Testing facility used
// by handshake/coexistence replays that need a mark on an exact packet.
struct ForcedMark {
  CongestionLevel level = CongestionLevel::None;
  SimTime from = 0;
  SimTime until = 0;
};

struct QueueConfig {
  int capacity = 100;       // packets
  double th1 = 0.3;         // lower marking threshold, fraction of capacity
  double th2 = 0.5;         // upper marking threshold
  int red_min = 30;         // RED minimum, packets
  int red_max = 60;         // RED maximum, packets
  double red_max_p = 0.1;   // RED probability at red_max
  double red_qw = 0.002;    // weight of the RED average-queue filter
  QueueMode mode = QueueMode::Eecn;
  SimTime epoch = from_millis(100);  // rate measurement window
  std::optional<ForcedMark> forced_mark;
};

// Arrival/departure rates over trailing fixed windows. The most recently
// completed window is the estimate; counters reset exactly at boundaries.
class RateEstimator {
 public:
  explicit RateEstimator(SimTime epoch_len) : epoch_len_(epoch_len) {}

  void on_arrival(SimTime now) {
    advance(now);
    ++window_arrivals_;
  }
  void on_departure(SimTime now) {
    advance(now);
    ++window_departures_;
  }

  double arrival_rate(SimTime now) {  // packets/second
    advance(now);
    return arrival_rate_;
  }
  double departure_rate(SimTime now) {
    advance(now);
    return departure_rate_;
  }

  void advance(SimTime now) {
    while (epoch_start_ + epoch_len_ <= now) {
      const double len_s = to_seconds(epoch_len_);
      arrival_rate_ = static_cast<double>(window_arrivals_) / len_s;
      departure_rate_ = static_cast<double>(window_departures_) / len_s;
      window_arrivals_ = 0;
      window_departures_ = 0;
      epoch_start_ += epoch_len_;
    }
  }

 private:
  SimTime epoch_len_;
  SimTime epoch_start_ = 0;
  std::uint64_t window_arrivals_ = 0;
  std::uint64_t window_departures_ = 0;
  double arrival_rate_ = 0.0;
  double departure_rate_ = 0.0;
};

// Congestion-level estimate: queue occupancy plus the expected change over
// the next 100 ms, as a fraction of total queue length, clamped to [0, 1].
inline double congestion_value(double occupancy, double capacity,
                               double arrival_rate, double departure_rate) {
  const double v = (occupancy + arrival_rate / 10.0 - departure_rate / 10.0) / capacity;
  return std::clamp(v, 0.0, 1.0);
}

inline CongestionLevel classify_value(double value, double th1, double th2) {
  if (value < th1) return CongestionLevel::None;
  if (value < th2) return CongestionLevel::CL1;
  return CongestionLevel::CL2;
}

class RouterQueue {
 public:
  enum class Verdict : std::uint8_t { Admitted, DroppedTail, DroppedRed };

  struct MarkOutcome {
    bool drop = false;                                  // RED drop decision
    bool marked = false;                                // codepoint changed
    CongestionLevel stamped = CongestionLevel::None;    // level after marking
    EcnCodepoint before{};
    EcnCodepoint after{};
  };

  RouterQueue(QueueConfig cfg, std::string id)
      : cfg_(cfg), id_(std::move(id)), rate_(cfg.epoch) {
    if (cfg_.capacity <= 0)
      throw ConfigError("queue " + id_ + ": capacity must be positive");
    if (!(cfg_.th1 > 0.0 && cfg_.th1 < 1.0) || !(cfg_.th2 > 0.0 && cfg_.th2 < 1.0))
      throw ConfigError("queue " + id_ + ": th1/th2 must lie in (0,1)");
    if (cfg_.th1 >= cfg_.th2)
      throw ConfigError("queue " + id_ + ": th1 must be < th2");
    if (cfg_.red_min < 0 || cfg_.red_max <= cfg_.red_min)
      throw ConfigError("queue " + id_ + ": need 0 <= red_min < red_max");
  }

  const QueueConfig& config() const { return cfg_; }
  const std::string& id() const { return id_; }
  std::size_t occupancy() const { return fifo_.size(); }
  bool empty() const { return fifo_.empty(); }

  double congestion_level_value(SimTime now) {
    return congestion_value(static_cast<double>(fifo_.size()),
                            static_cast<double>(cfg_.capacity),
                            rate_.arrival_rate(now), rate_.departure_rate(now));
  }

  CongestionLevel classify(SimTime now) {
    CongestionLevel local =
        classify_value(congestion_level_value(now), cfg_.th1, cfg_.th2);
    return max_level(local, forced_level(now));
  }

  // Marking / early-drop policy for an arriving packet that is not a tail
  // drop. Mutates the packet's codepoint on a mark.
  MarkOutcome mark_or_forward(Packet& p, SimTime now, SplitMix64& rng) {
    MarkOutcome out;
    out.before = p.cp;
    out.after = p.cp;

    if (cfg_.mode == QueueMode::Eecn) {
      if (!markable(p.cp) && p.cp != kCpCl2) {
        // Unmarkable traffic gets classic RED.
        out.drop = red_drop_decision(rng);
        return out;
      }
      const CongestionLevel carried = coexist_map_ecn_to_eecn(p.cp);
      if (carried == CongestionLevel::CL2) return out;  // forward unchanged
      const CongestionLevel local = classify(now);
      CongestionLevel target = carried;
      if (carried == CongestionLevel::CL1) {
        // Upgrade only; a level is never lowered.
        if (local == CongestionLevel::CL2) target = CongestionLevel::CL2;
      } else {
        target = local;
      }
      if (target != carried) {
        p.cp = with_level(p.cp, target);
        out.marked = true;
        out.stamped = target;
        out.after = p.cp;
      }
      return out;
    }

    // Classic mode: only (1,1) is ever stamped, and only on markable packets.
    // Markable traffic is marked rather than dropped all the way up to the
    // tail; unmarkable traffic takes the RED drop.
    if (!markable(p.cp)) {
      if (p.cp == kCpCl2) return out;  // already CE
      out.drop = red_drop_decision(rng);
      return out;
    }
    bool mark = red_ramp_hit(rng);
    if (forced_level(now) > CongestionLevel::None) mark = true;
    if (mark) {
      p.cp = kCpCl2;
      out.marked = true;
      out.stamped = CongestionLevel::CL2;
      out.after = p.cp;
    }
    return out;
  }

  // Full arrival pipeline: rate accounting, tail drop, policy, insert.
  Verdict offer(Packet& p, SimTime now, SplitMix64& rng, TraceLog* trace,
                MarkOutcome* outcome = nullptr) {
    rate_.on_arrival(now);
    red_avg_ += cfg_.red_qw * (static_cast<double>(fifo_.size()) - red_avg_);
    if (fifo_.size() >= static_cast<std::size_t>(cfg_.capacity)) {
      ++dropped_;
      if (trace)
        trace->add(now, "queue:" + id_, TraceEvent::Drop, p.flow,
                   "pkt=" + std::to_string(p.id) + ";reason=tail;occ=" +
                       std::to_string(fifo_.size()));
      return Verdict::DroppedTail;
    }
    MarkOutcome mo = mark_or_forward(p, now, rng);
    if (outcome) *outcome = mo;
    if (mo.drop) {
      ++dropped_;
      if (trace)
        trace->add(now, "queue:" + id_, TraceEvent::Drop, p.flow,
                   "pkt=" + std::to_string(p.id) + ";reason=red;occ=" +
                       std::to_string(fifo_.size()));
      return Verdict::DroppedRed;
    }
    if (mo.marked) {
      if (mo.stamped == CongestionLevel::CL2) ++marks_cl2_; else ++marks_cl1_;
      if (trace)
        trace->add(now, "queue:" + id_, TraceEvent::Mark, p.flow,
                   "pkt=" + std::to_string(p.id) +
                       ";cp_before=" + to_string(mo.before) +
                       ";cp_after=" + to_string(mo.after) +
                       ";occ=" + std::to_string(fifo_.size()));
    }
    fifo_.push_back({p, now});
    ++enqueued_;
    if (trace)
      trace->add(now, "queue:" + id_, TraceEvent::Enqueue, p.flow,
                 "pkt=" + std::to_string(p.id) + ";cp=" + to_string(p.cp) +
                     ";occ=" + std::to_string(fifo_.size()));
    return Verdict::Admitted;
  }

  // Removes the head for transmission. Sojourn = now - enqueue time.
  Packet pop(SimTime now, TraceLog* trace, SimTime* sojourn = nullptr) {
    if (fifo_.empty()) throw SimError("dequeue on empty queue " + id_);
    Item it = fifo_.front();
    fifo_.pop_front();
    rate_.on_departure(now);
    ++dequeued_;
    sojourn_total_ += now - it.enq;
    if (sojourn) *sojourn = now - it.enq;
    if (trace)
      trace->add(now, "queue:" + id_, TraceEvent::Dequeue, it.p.flow,
                 "pkt=" + std::to_string(it.p.id) + ";cp=" + to_string(it.p.cp) +
                     ";occ=" + std::to_string(fifo_.size()));
    return it.p;
  }

  // Lifetime counters; conservation holds at every instant:
  // enqueued == dequeued + occupancy, and arrivals == enqueued + dropped.
  std::uint64_t enqueued() const { return enqueued_; }
  std::uint64_t dequeued() const { return dequeued_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t marks_cl1() const { return marks_cl1_; }
  std::uint64_t marks_cl2() const { return marks_cl2_; }
  SimTime sojourn_total() const { return sojourn_total_; }
  double red_avg() const { return red_avg_; }

 private:
  struct Item {
    Packet p;
    SimTime enq;
  };

  CongestionLevel forced_level(SimTime now) const {
    if (cfg_.forced_mark && now >= cfg_.forced_mark->from &&
        now < cfg_.forced_mark->until)
      return cfg_.forced_mark->level;
    return CongestionLevel::None;
  }

  // Classic RED on the smoothed queue length: the base probability ramps
  // between the thresholds and escalates with the count of packets since the
  // last hit, p / (1 - count * p), which spaces hits near-uniformly.
  bool red_ramp_hit(SplitMix64& rng) {
    if (red_avg_ < cfg_.red_min) {
      red_count_ = 0;
      return false;
    }
    if (red_avg_ >= cfg_.red_max) {
      red_count_ = 0;
      return true;
    }
    const double pb = cfg_.red_max_p * (red_avg_ - cfg_.red_min) /
                      static_cast<double>(cfg_.red_max - cfg_.red_min);
    const double denom = 1.0 - static_cast<double>(red_count_) * pb;
    const double pa = denom <= 0.0 ? 1.0 : std::min(1.0, pb / denom);
    if (rng.next_double() < pa) {
      red_count_ = 0;
      return true;
    }
    ++red_count_;
    return false;
  }

  bool red_drop_decision(SplitMix64& rng) { return red_ramp_hit(rng); }

  QueueConfig cfg_;
  std::string id_;
  RateEstimator rate_;
  std::deque<Item> fifo_;
  std::uint64_t enqueued_ = 0;
  std::uint64_t dequeued_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t marks_cl1_ = 0;
  std::uint64_t marks_cl2_ = 0;
  std::uint64_t red_count_ = 0;
  double red_avg_ = 0.0;
  SimTime sojourn_total_ = 0;
};

}  // namespace eecn
