// include/eecn/trace.hpp
// Flat event trace. Exported as CSV with the header
//   time_s,entity,event,flow,detail
// detail is a semicolon-separated key=value list so rows need no quoting.

#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eecn/sim_time.hpp"

namespace eecn {

enum class TraceEvent : std::uint8_t {
  Enqueue,
  Dequeue,
  Mark,
  Drop,
  Syn,
  SynAck,
  Ack,
  Data,
  Echo,
  Cwr,
  Loss,
  Rto,
  Violation,
  Reset,
};

constexpr const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Enqueue: return "enqueue";
    case TraceEvent::Dequeue: return "dequeue";
    case TraceEvent::Mark: return "mark";
    case TraceEvent::Drop: return "drop";
    case TraceEvent::Syn: return "syn";
    case TraceEvent::SynAck: return "synack";
    case TraceEvent::Ack: return "ack";
    case TraceEvent::Data: return "data";
    case TraceEvent::Echo: return "echo";
    case TraceEvent::Cwr: return "cwr";
    case TraceEvent::Loss: return "loss";
    case TraceEvent::Rto: return "rto";
    case TraceEvent::Violation: return "violation";
    case TraceEvent::Reset: return "reset";
  }
  return "?";
}

struct TraceRow {
  SimTime t = 0;
  std::string entity;
  TraceEvent event = TraceEvent::Enqueue;
  std::uint32_t flow = 0;
  std::string detail;
};

class TraceLog {
 public:
  void enable(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }

  void add(SimTime t, std::string entity, TraceEvent ev, std::uint32_t flow,
           std::string detail) {
    if (!enabled_) return;
    rows_.push_back({t, std::move(entity), ev, flow, std::move(detail)});
  }

  const std::vector<TraceRow>& rows() const { return rows_; }
  void clear() { rows_.clear(); }

  void write_csv(std::ostream& os) const {
    os << "time_s,entity,event,flow,detail\n";
    char buf[32];
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof(buf), "%.9f", to_seconds(r.t));
      os << buf << ',' << r.entity << ',' << to_string(r.event) << ','
         << r.flow << ',' << r.detail << '\n';
    }
  }

  std::string to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
  }

 private:
  bool enabled_ = false;
  std::vector<TraceRow> rows_;
};

}  // namespace eecn
