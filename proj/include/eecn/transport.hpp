// include/eecn/transport.hpp
// Endpoint state machines and congestion control.
//
// Three sender algorithms share one loss-recovery path (New Reno fast
// retransmit / RTO) so that measured differences isolate the notification
// mechanism:
//   Eecn       — two-level feedback. CL2 divides the window by d (d/2 when
//                the current RTT is below average); CL1 decays it by
//                e^-(cRTT - avgRTT). Slow start and congestion avoidance are
//                RTT-moderated. Handshake control packets are markable and
//                pick the initial window (10/5/1 segments).
//   NewReno    — plain loss-based New Reno.
//   NewRenoEcn — New Reno plus classic single-bit echo (halve once per RTT
//                on ECE, CWR back).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "eecn/codepoint.hpp"
#include "eecn/packet.hpp"
#include "eecn/sim_time.hpp"
#include "eecn/trace.hpp"

namespace eecn {

enum class CcAlgo : std::uint8_t { Eecn, NewReno, NewRenoEcn };

constexpr const char* to_string(CcAlgo a) {
  switch (a) {
    case CcAlgo::Eecn: return "eecn";
    case CcAlgo::NewReno: return "newreno";
    case CcAlgo::NewRenoEcn: return "ecn";
  }
  return "?";
}

enum class TcpPhase : std::uint8_t { Handshake, SlowStart, CongestionAvoidance, Recovery };

constexpr const char* to_string(TcpPhase p) {
  switch (p) {
    case TcpPhase::Handshake: return "handshake";
    case TcpPhase::SlowStart: return "slowstart";
    case TcpPhase::CongestionAvoidance: return "avoidance";
    case TcpPhase::Recovery: return "recovery";
  }
  return "?";
}

enum class LossKind : std::uint8_t { TripleDupAck, Timeout };

struct TransportConfig {
  double d = 8.0;           // CL2 divisor; d/2 when cRTT < avgRTT
  double sigma_ss = 0.3;    // slow-start smoothing when cRTT >= avgRTT
  double sigma_ca = 0.02;   // avoidance growth when cRTT < avgRTT
  // Connection-average RTT estimator. The running mean stays anchored by
  // the uncongested early samples, so the decay exponent keeps tracking the
  // standing queue; a fast EWMA converges onto the current RTT and stalls
  // the decay, which lets a standing queue persist (selectable for
  // sensitivity runs).
  bool avg_rtt_running_mean = true;
  double avg_rtt_gain = 0.125;  // EWMA weight when the mean is disabled
  bool ca_decay_once_per_rtt = false; // literal per-ACK decay by default
  double reaction_window_rtts = 1.0;  // one window reduction per RTT per level
  double init_rto_s = 1.0;
  double min_rto_s = 0.2;
  double max_rto_s = 60.0;
};

// What the handshake taught an endpoint about its own control packets.
struct HandshakeOutcome {
  bool peer_capable = false;
  CongestionLevel observed_level = CongestionLevel::None;
};

struct ConnectionState {
  CcAlgo cc_algo = CcAlgo::NewReno;
  TransportConfig cfg;

  std::uint32_t seg_size = 1000;  // SZ, bytes
  double cwnd = 10000.0;          // bytes
  double ssthresh = std::numeric_limits<double>::max() / 4;

  double avg_rtt = 0.0;  // seconds; the connection-average estimate
  double cur_rtt = 0.0;  // cRTT, seconds
  int rtt_samples = 0;
  double srtt = 0.0;     // retransmission timer estimate
  double rttvar = 0.0;
  double rto = 1.0;      // seconds

  TcpPhase phase = TcpPhase::Handshake;
  bool eecn_negotiated = false;
  bool ecn_negotiated = false;

  // Receiver-side echo obligations.
  CongestionLevel pending_echo = CongestionLevel::None;
  int cl1_echo_remaining = 0;

  bool cwr_pending = false;

  std::uint64_t next_seq = 0;
  std::uint64_t highest_ack = 0;
  int dupack_count = 0;
  std::uint64_t recover = 0;  // recovery point for New Reno

  // Once-per-RTT gates (simulation seconds; -inf = never fired).
  double last_reaction_cl1 = -1e300;
  double last_reaction_cl2 = -1e300;
  double last_ca_decay = -1e300;

  bool rtt_at_or_above_avg() const {
    return rtt_samples > 0 && cur_rtt >= avg_rtt;
  }
};

// ---------------------------------------------------------------------------
// Window arithmetic (pure state transitions, unit-testable in isolation).

// Initial window from the handshake: 10 segments on a clean path, 5 after a
// level-1 mark, 1 after level-2. A non-capable peer gets the plain default.
inline double initial_cwnd(const HandshakeOutcome& o, std::uint32_t seg_size) {
  const double sz = seg_size;
  if (!o.peer_capable) return 10.0 * sz;
  switch (o.observed_level) {
    case CongestionLevel::None: return 10.0 * sz;
    case CongestionLevel::CL1: return 5.0 * sz;
    case CongestionLevel::CL2: return 1.0 * sz;
  }
  return 10.0 * sz;
}

// Slow start ends when the window meets the threshold and is re-entered
// only after a retransmission timeout; passive decay below the threshold
// must not flip the connection back into slow-start growth.
inline void sync_phase_after_cwnd_change(ConnectionState& st) {
  if (st.phase == TcpPhase::SlowStart && st.cwnd >= st.ssthresh)
    st.phase = TcpPhase::CongestionAvoidance;
}

// Sender reaction to an echoed congestion level. At most one reduction per
// average RTT per level; a reduction never raises the window.
inline void on_congestion_echo(ConnectionState& st, CongestionLevel level,
                               double now_s) {
  const double sz = st.seg_size;
  double& last = level == CongestionLevel::CL2 ? st.last_reaction_cl2
                                               : st.last_reaction_cl1;
  if (now_s - last < st.avg_rtt * st.cfg.reaction_window_rtts) return;
  last = now_s;

  if (level == CongestionLevel::CL2) {
    const double divisor = st.rtt_at_or_above_avg() || st.rtt_samples == 0
                               ? st.cfg.d
                               : st.cfg.d / 2.0;
    st.ssthresh = std::max(2.0 * sz, st.cwnd / divisor);
    st.cwnd = std::min(st.cwnd, st.ssthresh);
  } else if (level == CongestionLevel::CL1) {
    if (st.rtt_at_or_above_avg() || st.rtt_samples == 0) {
      const double beta = st.cur_rtt - st.avg_rtt;  // seconds
      st.ssthresh = st.cwnd * std::exp(-beta);
      st.cwnd = st.ssthresh;
    }
  } else {
    return;  // no level, nothing to do
  }
  st.cwnd = std::max(st.cwnd, sz);
  sync_phase_after_cwnd_change(st);
  st.cwr_pending = true;
}

// Per-ACK window growth. The two-level algorithm moderates growth by RTT;
// the baselines use the classic New Reno rules.
inline void on_ack_window_growth(ConnectionState& st, double now_s = 0.0) {
  const double sz = st.seg_size;
  const bool eecn_rules = st.cc_algo == CcAlgo::Eecn && st.eecn_negotiated;

  if (st.phase == TcpPhase::SlowStart) {
    if (eecn_rules && st.rtt_at_or_above_avg())
      st.cwnd += sz * st.cfg.sigma_ss;
    else
      st.cwnd += sz;
  } else if (eecn_rules) {
    // Avoidance: decay towards the average RTT, creep up below it.
    if (st.rtt_at_or_above_avg()) {
      if (!st.cfg.ca_decay_once_per_rtt ||
          now_s - st.last_ca_decay >= st.avg_rtt) {
        st.last_ca_decay = now_s;
        st.cwnd *= std::exp(-(st.cur_rtt - st.avg_rtt));
      }
    } else {
      st.cwnd += sz * st.cfg.sigma_ca;
    }
  } else {
    st.cwnd += sz * sz / st.cwnd;
  }
  st.cwnd = std::max(st.cwnd, sz);
  sync_phase_after_cwnd_change(st);
}

// Receiver bookkeeping for an arriving marked data packet: CL2 is echoed on
// every ACK until the sender's CWR lands; CL1 is echoed on the next three
// ACKs and then stops on its own.
inline void receiver_on_marked_packet(ConnectionState& st, CongestionLevel level) {
  if (level == CongestionLevel::CL2) {
    st.pending_echo = CongestionLevel::CL2;
  } else if (level == CongestionLevel::CL1 &&
             st.pending_echo != CongestionLevel::CL2) {
    st.pending_echo = CongestionLevel::CL1;
    st.cl1_echo_remaining = 3;
  }
}

inline void receiver_on_cwr(ConnectionState& st) {
  if (st.pending_echo == CongestionLevel::CL2)
    st.pending_echo = CongestionLevel::None;
}

// New RTT sample (Karn-filtered by the caller). Updates the connection
// average (EWMA or running mean) and the retransmission timer.
inline void on_rtt_sample(ConnectionState& st, double sample_s) {
  st.cur_rtt = sample_s;
  if (st.rtt_samples == 0) {
    st.avg_rtt = sample_s;
    st.srtt = sample_s;
    st.rttvar = sample_s / 2.0;
  } else {
    if (st.cfg.avg_rtt_running_mean)
      st.avg_rtt += (sample_s - st.avg_rtt) / (st.rtt_samples + 1);
    else
      st.avg_rtt += st.cfg.avg_rtt_gain * (sample_s - st.avg_rtt);
    st.rttvar = 0.75 * st.rttvar + 0.25 * std::abs(st.srtt - sample_s);
    st.srtt = 0.875 * st.srtt + 0.125 * sample_s;
  }
  ++st.rtt_samples;
  st.rto = std::clamp(st.srtt + 4.0 * st.rttvar, st.cfg.min_rto_s, st.cfg.max_rto_s);
}

// Shared New Reno loss response.
inline void on_loss(ConnectionState& st, LossKind kind) {
  const double sz = st.seg_size;
  st.ssthresh = std::max(2.0 * sz, st.cwnd / 2.0);
  if (kind == LossKind::Timeout) {
    st.cwnd = sz;
    st.phase = TcpPhase::SlowStart;
    st.dupack_count = 0;
  } else {
    st.cwnd = st.ssthresh + 3.0 * sz;  // inflate by the three dupacks
    st.phase = TcpPhase::Recovery;
    st.recover = st.next_seq;
  }
}

// Classic single-bit reaction: one halving per RTT while ECE is echoed.
inline void baseline_ecn_behavior(ConnectionState& st, double now_s) {
  if (st.cc_algo != CcAlgo::NewRenoEcn || !st.ecn_negotiated) return;
  if (now_s - st.last_reaction_cl2 < st.avg_rtt) return;
  st.last_reaction_cl2 = now_s;
  st.ssthresh = std::max(2.0 * st.seg_size, st.cwnd / 2.0);
  st.cwnd = std::min(st.cwnd, st.ssthresh);
  sync_phase_after_cwnd_change(st);
  st.cwr_pending = true;
}

// ---------------------------------------------------------------------------
// Endpoint: one side of a connection. Owns the state machine, segment
// bookkeeping, reassembly and the retransmission timer. All outgoing packets
// are appended to the caller's vector; the event loop handles delivery.

enum class Role : std::uint8_t { Initiator, Responder };

class Endpoint {
 public:
  Endpoint(std::uint32_t flow, Role role, CcAlgo algo, std::uint64_t bytes_to_send,
           std::uint32_t self_node, std::uint32_t peer_node, std::uint32_t seg_size,
           TransportConfig cfg = {})
      : flow_(flow),
        role_(role),
        bytes_(bytes_to_send),
        self_(self_node),
        peer_(peer_node) {
    st_.cc_algo = algo;
    st_.cfg = cfg;
    st_.seg_size = seg_size;
    st_.cwnd = 10.0 * seg_size;
    st_.rto = cfg.init_rto_s;
    entity_ = "conn:" + std::to_string(flow) + ":" +
              (role == Role::Initiator ? "i" : "r");
  }

  void set_trace(TraceLog* log) { trace_ = log; }

  // --- engine surface ------------------------------------------------------

  // Initiator entry point: send the SYN.
  void start(SimTime now, std::vector<Packet>& out) {
    if (role_ != Role::Initiator || dead_) return;
    syn_sent_ = now;
    Packet p = make_packet(/*syn=*/true, /*ack=*/false);
    stamp_control(p, /*echo=*/CongestionLevel::None);
    trace(now, TraceEvent::Syn, "");
    emit(p, now, /*rtx=*/false, out);
    arm_rto(now);
  }

  void on_packet(const Packet& p, SimTime now, std::vector<Packet>& out) {
    if (dead_) return;
    if (p.syn && !p.ack) handle_syn(p, now, out);
    else if (p.syn && p.ack) handle_synack(p, now, out);
    else if (p.is_data()) handle_data(p, now, out);
    else handle_ack(p, now, out);
  }

  void on_timer(SimTime now, std::vector<Packet>& out) {
    if (dead_ || rto_deadline_ == 0 || now < rto_deadline_) return;
    rto_deadline_ = 0;
    trace(now, TraceEvent::Rto, "");
    if (st_.phase == TcpPhase::Handshake) {
      retransmit_handshake(now, out);
      return;
    }
    if (st_.highest_ack >= bytes_) return;  // nothing outstanding
    on_loss(st_, LossKind::Timeout);
    trace(now, TraceEvent::Loss, "kind=timeout");
    st_.rto = std::min(st_.rto * 2.0, st_.cfg.max_rto_s);  // Karn backoff
    outstanding_.clear();  // timed-out samples are no longer usable
    // Go-back-N: everything past the last ACK counts as lost again.
    st_.next_seq = st_.highest_ack;
    send_segment(st_.highest_ack, now, /*rtx=*/true, out);
    st_.next_seq =
        st_.highest_ack +
        std::min<std::uint64_t>(st_.seg_size, bytes_ - st_.highest_ack);
    try_send(now, out);
    arm_rto(now);
  }

  SimTime rto_deadline() const { return rto_deadline_; }

  // --- inspection ----------------------------------------------------------

  const ConnectionState& state() const { return st_; }
  ConnectionState& state() { return st_; }
  const HandshakeOutcome& outcome() const { return outcome_; }
  bool handshake_done() const { return handshake_done_; }
  std::uint64_t delivered_prefix() const { return delivered_prefix_; }
  bool receive_complete(std::uint64_t expected) const {
    return delivered_prefix_ >= expected && handshake_done_;
  }
  bool send_complete() const { return bytes_ > 0 && st_.highest_ack >= bytes_; }
  std::uint64_t bytes_to_send() const { return bytes_; }
  Role role() const { return role_; }
  std::uint32_t flow() const { return flow_; }
  std::uint32_t self_node() const { return self_; }
  bool dead() const { return dead_; }
  const std::vector<std::pair<SimTime, double>>& rtt_history() const {
    return rtt_history_;
  }
  std::uint64_t segments_sent() const { return segments_sent_; }
  std::uint64_t retransmits() const { return retransmits_; }

 private:
  // --- handshake -----------------------------------------------------------

  void handle_syn(const Packet& p, SimTime now, std::vector<Packet>& out) {
    if (role_ == Role::Initiator) {
      reset(now);  // a SYN at the connection opener is a broken exchange
      return;
    }
    if (st_.phase != TcpPhase::Handshake) return;  // stale duplicate
    peer_syn_seen_ = true;
    const TcpEecn sig = decode_tcp_eecn(p.tcp_signal());
    if (st_.cc_algo == CcAlgo::Eecn) {
      peer_offers_eecn_ = sig == TcpEecn::Capable;
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn) {
      peer_offers_ecn_ = p.ece && p.cwr;
    }
    syn_level_seen_ = coexist_map_ecn_to_eecn(p.cp);
    Packet sa = make_packet(/*syn=*/true, /*ack=*/true);
    stamp_control(sa, syn_level_seen_);
    synack_sent_ = now;
    trace(now, TraceEvent::SynAck, "echo=" + std::string(to_string(syn_level_seen_)));
    emit(sa, now, /*rtx=*/false, out);
    arm_rto(now);
  }

  void handle_synack(const Packet& p, SimTime now, std::vector<Packet>& out) {
    if (role_ != Role::Initiator) {
      reset(now);
      return;
    }
    if (st_.phase != TcpPhase::Handshake) {
      // SYN-ACK retransmission: our final ACK was lost, answer it again.
      Packet a = make_packet(/*syn=*/false, /*ack=*/true);
      a.ack_no = 0;
      stamp_final_ack(a, st_.cc_algo == CcAlgo::Eecn
                             ? coexist_map_ecn_to_eecn(p.cp)
                             : CongestionLevel::None);
      emit(a, now, /*rtx=*/true, out);
      return;
    }
    const TcpEecn sig = decode_tcp_eecn(p.tcp_signal());
    HandshakeOutcome o;
    if (st_.cc_algo == CcAlgo::Eecn) {
      switch (sig) {
        case TcpEecn::Capable: o = {true, CongestionLevel::None}; break;
        case TcpEecn::CL1Echo: o = {true, CongestionLevel::CL1}; break;
        case TcpEecn::CL2Echo: o = {true, CongestionLevel::CL2}; break;
        default: o = {false, CongestionLevel::None}; break;  // fail safe
      }
      st_.eecn_negotiated = o.peer_capable;
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn) {
      st_.ecn_negotiated = p.ece && !p.cwr;
      o = {st_.ecn_negotiated, CongestionLevel::None};
    } else {
      o = {false, CongestionLevel::None};
    }
    on_rtt_sample(st_, to_seconds(now - syn_sent_));
    rtt_history_.push_back({now, st_.cur_rtt});
    complete_handshake(o);
    // Echo any mark the SYN-ACK itself picked up, once, in the final ACK.
    const CongestionLevel synack_level = st_.cc_algo == CcAlgo::Eecn
                                             ? coexist_map_ecn_to_eecn(p.cp)
                                             : CongestionLevel::None;
    Packet a = make_packet(/*syn=*/false, /*ack=*/true);
    a.ack_no = 0;
    stamp_final_ack(a, synack_level);
    trace(now, TraceEvent::Ack, "handshake=1;echo=" + std::string(to_string(synack_level)));
    emit(a, now, /*rtx=*/false, out);
    try_send(now, out);
  }

  // Responder-side handshake completion, from the final ACK (or implicitly
  // from the first data segment when that ACK was lost).
  void complete_handshake_responder(const Packet* final_ack, SimTime now) {
    HandshakeOutcome o;
    if (st_.cc_algo == CcAlgo::Eecn) {
      o.peer_capable = peer_offers_eecn_;
      if (final_ack && peer_offers_eecn_) {
        switch (decode_tcp_eecn(final_ack->tcp_signal())) {
          case TcpEecn::CL1Echo: o.observed_level = CongestionLevel::CL1; break;
          case TcpEecn::CL2Echo: o.observed_level = CongestionLevel::CL2; break;
          default: break;
        }
      }
      st_.eecn_negotiated = o.peer_capable;
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn) {
      st_.ecn_negotiated = peer_offers_ecn_;
      o = {peer_offers_ecn_, CongestionLevel::None};
    }
    if (synack_sent_ != 0) {
      on_rtt_sample(st_, to_seconds(now - synack_sent_));
      rtt_history_.push_back({now, st_.cur_rtt});
    }
    complete_handshake(o);
  }

  void complete_handshake(const HandshakeOutcome& o) {
    outcome_ = o;
    st_.cwnd = initial_cwnd(o, st_.seg_size);
    st_.phase = TcpPhase::SlowStart;
    handshake_done_ = true;
    rto_deadline_ = 0;
  }

  void retransmit_handshake(SimTime now, std::vector<Packet>& out) {
    st_.rto = std::min(st_.rto * 2.0, st_.cfg.max_rto_s);
    if (role_ == Role::Initiator) {
      Packet p = make_packet(true, false);
      stamp_control(p, CongestionLevel::None);
      trace(now, TraceEvent::Syn, "rtx=1");
      emit(p, now, /*rtx=*/true, out);
    } else if (peer_syn_seen_) {
      Packet p = make_packet(true, true);
      stamp_control(p, syn_level_seen_);
      trace(now, TraceEvent::SynAck, "rtx=1");
      emit(p, now, /*rtx=*/true, out);
    }
    arm_rto(now);
  }

  // --- data / ack path -----------------------------------------------------

  void handle_data(const Packet& p, SimTime now, std::vector<Packet>& out) {
    if (st_.phase == TcpPhase::Handshake) {
      if (role_ == Role::Initiator) {  // data before SYN-ACK: broken exchange
        reset(now);
        return;
      }
      complete_handshake_responder(nullptr, now);
    }
    trace(now, TraceEvent::Data, "seq=" + std::to_string(p.seq) +
                                     ";len=" + std::to_string(p.payload) +
                                     ";cp=" + to_string(p.cp));
    // Congestion mark and CWR processing comes before the ACK is built.
    if (st_.cc_algo == CcAlgo::Eecn && st_.eecn_negotiated) {
      const CongestionLevel level = coexist_map_ecn_to_eecn(p.cp);
      if (level > CongestionLevel::None) receiver_on_marked_packet(st_, level);
      if (decode_tcp_eecn(p.tcp_signal()) == TcpEecn::Cwr) {
        trace(now, TraceEvent::Cwr, "rx=1");
        receiver_on_cwr(st_);
      }
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn && st_.ecn_negotiated) {
      if (p.cp == kCpCl2) ecn_ce_pending_ = true;
      if (p.cwr) {
        trace(now, TraceEvent::Cwr, "rx=1");
        ecn_ce_pending_ = false;
      }
    }
    reassemble(p.seq, p.seq + p.payload);
    Packet a = make_packet(false, true);
    a.ack_no = delivered_prefix_;
    stamp_ack_echo(a, now);
    emit(a, now, /*rtx=*/false, out);
  }

  void handle_ack(const Packet& p, SimTime now, std::vector<Packet>& out) {
    if (st_.phase == TcpPhase::Handshake) {
      if (role_ == Role::Initiator) {
        reset(now);  // pure ACK before the SYN-ACK: broken exchange
        return;
      }
      complete_handshake_responder(&p, now);
      trace(now, TraceEvent::Ack, "handshake=1");
      try_send(now, out);
      return;
    }

    // Echoed congestion feedback.
    if (st_.cc_algo == CcAlgo::Eecn) {
      if (st_.eecn_negotiated) {
        const TcpEecn sig = decode_tcp_eecn(p.tcp_signal());
        if (sig == TcpEecn::CL1Echo || sig == TcpEecn::CL2Echo) {
          const CongestionLevel lvl = sig == TcpEecn::CL2Echo
                                          ? CongestionLevel::CL2
                                          : CongestionLevel::CL1;
          const double before = st_.cwnd;
          on_congestion_echo(st_, lvl, to_seconds(now));
          trace(now, TraceEvent::Echo,
                "level=" + std::string(to_string(lvl)) +
                    ";dir=rx;cwnd_before=" + format_double(before));
        }
      } else if (decode_tcp_eecn(p.tcp_signal()) == TcpEecn::CL1Echo ||
                 decode_tcp_eecn(p.tcp_signal()) == TcpEecn::CL2Echo) {
        trace(now, TraceEvent::Violation, "echo-without-negotiation");
      }
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn && p.ece) {
      const double before = st_.cwnd;
      baseline_ecn_behavior(st_, to_seconds(now));
      trace(now, TraceEvent::Echo,
            "level=CE;dir=rx;cwnd_before=" + format_double(before));
    }

    if (p.ack_no > st_.highest_ack) {
      advance_ack(p.ack_no, now, out);
      // Restart the timer on forward progress only; duplicates must not
      // keep pushing the deadline out.
      if (st_.next_seq > st_.highest_ack) arm_rto(now);
      else rto_deadline_ = 0;
    } else if (p.ack_no == st_.highest_ack && st_.highest_ack < st_.next_seq) {
      duplicate_ack(now, out);
    }
    trace(now, TraceEvent::Ack, "ackno=" + std::to_string(p.ack_no));
    try_send(now, out);
  }

  void advance_ack(std::uint64_t ackno, SimTime now, std::vector<Packet>& out) {
    st_.dupack_count = 0;
    // Pop everything the ACK covers; sample RTT from the newest segment that
    // was never retransmitted (Karn's rule).
    bool have_sample = false;
    SimTime sample_sent = 0;
    while (!outstanding_.empty() && outstanding_.front().end <= ackno) {
      if (!outstanding_.front().rtx) {
        have_sample = true;
        sample_sent = outstanding_.front().sent;
      }
      outstanding_.pop_front();
    }
    if (have_sample) {
      on_rtt_sample(st_, to_seconds(now - sample_sent));
      rtt_history_.push_back({now, st_.cur_rtt});
    }
    const std::uint64_t acked = ackno - st_.highest_ack;
    st_.highest_ack = ackno;
    // After a go-back-N rewind a cumulative ACK can overtake next_seq when
    // the receiver had the later segments all along.
    st_.next_seq = std::max(st_.next_seq, st_.highest_ack);

    if (st_.phase == TcpPhase::Recovery) {
      if (ackno >= st_.recover) {
        st_.cwnd = st_.ssthresh;  // full ACK: deflate and leave recovery
        st_.phase = TcpPhase::CongestionAvoidance;
      } else {
        // Partial ACK: the next hole starts here, resend it right away.
        st_.cwnd = std::max(st_.cwnd - static_cast<double>(acked) + st_.seg_size,
                            2.0 * st_.seg_size);
        send_segment(ackno, now, /*rtx=*/true, out);
      }
      return;
    }
    on_ack_window_growth(st_, to_seconds(now));
  }

  void duplicate_ack(SimTime now, std::vector<Packet>& out) {
    if (st_.phase == TcpPhase::Recovery) {
      st_.cwnd += st_.seg_size;  // inflation while the hole persists
      return;
    }
    if (++st_.dupack_count < 3) return;
    on_loss(st_, LossKind::TripleDupAck);
    trace(now, TraceEvent::Loss, "kind=dupack");
    send_segment(st_.highest_ack, now, /*rtx=*/true, out);  // fast retransmit
    arm_rto(now);
  }

  void try_send(SimTime now, std::vector<Packet>& out) {
    if (!handshake_done_ || bytes_ == 0) return;
    bool sent = false;
    while (st_.next_seq < bytes_) {
      const std::uint64_t inflight = st_.next_seq - st_.highest_ack;
      const std::uint64_t len =
          std::min<std::uint64_t>(st_.seg_size, bytes_ - st_.next_seq);
      if (inflight + len > static_cast<std::uint64_t>(st_.cwnd)) break;
      send_segment(st_.next_seq, now, /*rtx=*/false, out);
      st_.next_seq += len;
      sent = true;
    }
    // Data in flight always has a running timer behind it.
    if (sent && rto_deadline_ == 0) arm_rto(now);
  }

  void send_segment(std::uint64_t start, SimTime now, bool rtx,
                    std::vector<Packet>& out) {
    const std::uint64_t len =
        std::min<std::uint64_t>(st_.seg_size, bytes_ - start);
    if (len == 0) return;
    Packet p = make_packet(false, false);
    p.seq = start;
    p.payload = static_cast<std::uint32_t>(len);
    if (st_.cc_algo == CcAlgo::Eecn && st_.eecn_negotiated) {
      p.cp = kCpCapable;  // data is markable
      if (st_.cwr_pending) {
        p.ece = false;
        p.cwr = true;  // on a data segment this signals the reduction
        st_.cwr_pending = false;
        trace(now, TraceEvent::Cwr, "tx=1");
      }
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn && st_.ecn_negotiated) {
      p.cp = kCpCl1;  // classic ECT(0)
      if (st_.cwr_pending) {
        p.cwr = true;
        st_.cwr_pending = false;
        trace(now, TraceEvent::Cwr, "tx=1");
      }
    }
    ++segments_sent_;
    if (rtx) {
      ++retransmits_;
      // Keep the original send time for delay accounting.
      p.first_sent = first_sent_of(start);
      trace(now, TraceEvent::Data, "seq=" + std::to_string(start) + ";rtx=1");
    } else {
      trace(now, TraceEvent::Data, "seq=" + std::to_string(start));
    }
    outstanding_.push_back({start, start + len, now, rtx});
    first_send_.emplace_back(start, rtx ? p.first_sent : now);
    emit(p, now, rtx, out);
  }

  // --- receiver reassembly -------------------------------------------------

  void reassemble(std::uint64_t s, std::uint64_t e) {
    if (e <= delivered_prefix_) return;  // stale duplicate
    segments_.push_back({s, e});
    bool grew = true;
    while (grew) {
      grew = false;
      for (auto& seg : segments_) {
        if (seg.first <= delivered_prefix_ && seg.second > delivered_prefix_) {
          delivered_prefix_ = seg.second;
          grew = true;
        }
      }
    }
    std::erase_if(segments_,
                  [&](const auto& seg) { return seg.second <= delivered_prefix_; });
  }

  // --- packet construction -------------------------------------------------

  Packet make_packet(bool syn, bool ack) {
    Packet p;
    p.flow = flow_;
    p.src_node = self_;
    p.dst_node = peer_;
    p.syn = syn;
    p.ack = ack;
    return p;
  }

  // SYN / SYN-ACK flags. EECN control packets are markable and advertise
  // capability through the TCP bits; the classic algorithms keep control
  // packets unmarkable. A responder whose peer did not offer the matching
  // capability answers plain, declining it.
  void stamp_control(Packet& p, CongestionLevel echo) {
    const bool declining =
        role_ == Role::Responder &&
        ((st_.cc_algo == CcAlgo::Eecn && !peer_offers_eecn_) ||
         (st_.cc_algo == CcAlgo::NewRenoEcn && !peer_offers_ecn_));
    if (st_.cc_algo == CcAlgo::NewReno || declining) {
      p.cp = kCpNotCapable;
      return;
    }
    switch (st_.cc_algo) {
      case CcAlgo::Eecn:
        p.cp = kCpCapable;
        if (echo == CongestionLevel::CL1) {
          p.ece = true;
          p.cwr = false;
        } else if (echo == CongestionLevel::CL2) {
          p.ece = true;
          p.cwr = true;
        } else {
          p.ece = false;
          p.cwr = true;  // ECT(1) row: capability
        }
        break;
      case CcAlgo::NewRenoEcn:
        p.cp = kCpNotCapable;
        if (p.syn && !p.ack) {
          p.ece = true;
          p.cwr = true;
        } else {
          p.ece = true;
          p.cwr = false;
        }
        break;
      case CcAlgo::NewReno:
        p.cp = kCpNotCapable;
        break;
    }
  }

  // Final handshake ACK: a pure, unmarkable ACK that carries the one-shot
  // echo about the SYN-ACK.
  void stamp_final_ack(Packet& p, CongestionLevel echo) {
    p.cp = kCpNotCapable;
    if (st_.cc_algo != CcAlgo::Eecn || !st_.eecn_negotiated) return;
    if (echo == CongestionLevel::CL1) {
      p.ece = true;
      p.cwr = false;
    } else if (echo == CongestionLevel::CL2) {
      p.ece = true;
      p.cwr = true;
    } else {
      p.ece = false;
      p.cwr = true;  // capability
    }
  }

  void stamp_ack_echo(Packet& a, SimTime now) {
    a.cp = kCpNotCapable;
    if (st_.cc_algo == CcAlgo::Eecn && st_.eecn_negotiated) {
      if (st_.pending_echo == CongestionLevel::CL2) {
        a.ece = true;
        a.cwr = true;
        trace(now, TraceEvent::Echo, "level=CL2;dir=tx");
      } else if (st_.pending_echo == CongestionLevel::CL1 &&
                 st_.cl1_echo_remaining > 0) {
        a.ece = true;
        a.cwr = false;
        trace(now, TraceEvent::Echo, "level=CL1;dir=tx");
        if (--st_.cl1_echo_remaining == 0)
          st_.pending_echo = CongestionLevel::None;
      }
    } else if (st_.cc_algo == CcAlgo::NewRenoEcn && st_.ecn_negotiated &&
               ecn_ce_pending_) {
      a.ece = true;
      trace(now, TraceEvent::Echo, "level=CE;dir=tx");
    }
  }

  // --- plumbing ------------------------------------------------------------

  void emit(Packet& p, SimTime now, bool rtx, std::vector<Packet>& out) {
    p.sent = now;
    p.retransmit = rtx;
    if (p.first_sent == 0) p.first_sent = now;
    out.push_back(p);
  }

  SimTime first_sent_of(std::uint64_t start) const {
    for (auto it = first_send_.rbegin(); it != first_send_.rend(); ++it)
      if (it->first == start) return it->second;
    return 0;
  }

  void arm_rto(SimTime now) {
    rto_deadline_ = now + from_seconds(st_.rto);
  }

  void reset(SimTime now) {
    trace(now, TraceEvent::Reset, "");
    dead_ = true;
    rto_deadline_ = 0;
  }

  void trace(SimTime now, TraceEvent ev, const std::string& extra) {
    if (!trace_ || !trace_->enabled()) return;
    std::string detail = "cwnd=" + format_double(st_.cwnd) +
                         ";ssthresh=" + format_double(st_.ssthresh) +
                         ";phase=" + to_string(st_.phase);
    if (!extra.empty()) detail += ";" + extra;
    trace_->add(now, entity_, ev, flow_, detail);
  }

  static std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }

  struct SegMeta {
    std::uint64_t start;
    std::uint64_t end;
    SimTime sent;
    bool rtx;
  };

  std::uint32_t flow_;
  Role role_;
  std::uint64_t bytes_;
  std::uint32_t self_;
  std::uint32_t peer_;
  std::string entity_;
  TraceLog* trace_ = nullptr;

  ConnectionState st_;
  HandshakeOutcome outcome_;
  bool handshake_done_ = false;
  bool dead_ = false;

  // Handshake bookkeeping.
  SimTime syn_sent_ = 0;
  SimTime synack_sent_ = 0;
  bool peer_syn_seen_ = false;
  bool peer_offers_eecn_ = false;
  bool peer_offers_ecn_ = false;
  CongestionLevel syn_level_seen_ = CongestionLevel::None;

  // Classic single-bit echo obligation.
  bool ecn_ce_pending_ = false;

  // Sender bookkeeping.
  std::deque<SegMeta> outstanding_;
  std::vector<std::pair<std::uint64_t, SimTime>> first_send_;
  std::uint64_t segments_sent_ = 0;
  std::uint64_t retransmits_ = 0;
  SimTime rto_deadline_ = 0;

  // Receiver reassembly.
  std::uint64_t delivered_prefix_ = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> segments_;

  std::vector<std::pair<SimTime, double>> rtt_history_;
};

}  // namespace eecn
