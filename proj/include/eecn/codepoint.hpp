// include/eecn/codepoint.hpp
// Two-bit IP congestion codepoints and the (ECE, CWR, SYN, ACK) TCP signal,
// with both interpretations: the classic one (Not-ECT / ECT / CE) and the
// two-level one (capability plus congestion levels CL1 and CL2).
//
// Only named bits are exposed; nothing here touches wire byte layouts.

#pragma once

#include <compare>
#include <cstdint>

namespace eecn {

// Severity carried by a marked packet. Ordered: routers may only upgrade.
enum class CongestionLevel : std::uint8_t { None = 0, CL1 = 1, CL2 = 2 };

constexpr bool operator<(CongestionLevel a, CongestionLevel b) {
  return static_cast<int>(a) < static_cast<int>(b);
}
constexpr CongestionLevel max_level(CongestionLevel a, CongestionLevel b) {
  return a < b ? b : a;
}

// The two IP header bits. ce_bit is bit 15, ect_bit is bit 14.
struct EcnCodepoint {
  bool ce_bit = false;
  bool ect_bit = false;

  friend constexpr bool operator==(EcnCodepoint, EcnCodepoint) = default;
};

inline constexpr EcnCodepoint kCpNotCapable{false, false};
inline constexpr EcnCodepoint kCpCapable{false, true};  // also classic ECT(1)
inline constexpr EcnCodepoint kCpCl1{true, false};      // also classic ECT(0)
inline constexpr EcnCodepoint kCpCl2{true, true};       // also classic CE

// Two-level interpretation of the IP field.
enum class IpEecn : std::uint8_t { NotCapable, Capable, CL1, CL2 };

// Classic interpretation of the same field.
enum class IpEcn : std::uint8_t { NotEct, Ect1, Ect0, Ce };

constexpr IpEecn decode_ip_eecn(EcnCodepoint cp) {
  if (!cp.ce_bit) return cp.ect_bit ? IpEecn::Capable : IpEecn::NotCapable;
  return cp.ect_bit ? IpEecn::CL2 : IpEecn::CL1;
}

constexpr EcnCodepoint encode_ip_eecn(IpEecn m) {
  switch (m) {
    case IpEecn::NotCapable: return kCpNotCapable;
    case IpEecn::Capable: return kCpCapable;
    case IpEecn::CL1: return kCpCl1;
    case IpEecn::CL2: return kCpCl2;
  }
  return kCpNotCapable;
}

constexpr IpEcn decode_ip_ecn(EcnCodepoint cp) {
  if (!cp.ce_bit) return cp.ect_bit ? IpEcn::Ect1 : IpEcn::NotEct;
  return cp.ect_bit ? IpEcn::Ce : IpEcn::Ect0;
}

constexpr EcnCodepoint encode_ip_ecn(IpEcn m) {
  switch (m) {
    case IpEcn::NotEct: return kCpNotCapable;
    case IpEcn::Ect1: return kCpCapable;
    case IpEcn::Ect0: return kCpCl1;
    case IpEcn::Ce: return kCpCl2;
  }
  return kCpNotCapable;
}

// Level already carried by a packet of a two-level-negotiated connection,
// regardless of which kind of router stamped it: CE and CL2 are the same
// codepoint, and ECT(0) doubles as CL1.
constexpr CongestionLevel coexist_map_ecn_to_eecn(EcnCodepoint cp) {
  if (!cp.ce_bit) return CongestionLevel::None;
  return cp.ect_bit ? CongestionLevel::CL2 : CongestionLevel::CL1;
}

// A packet a router may stamp under either interpretation. (0,0) traffic is
// never marked; (1,1) is already at the top.
constexpr bool markable(EcnCodepoint cp) { return cp.ce_bit != cp.ect_bit; }

constexpr EcnCodepoint with_level(EcnCodepoint cp, CongestionLevel level) {
  switch (level) {
    case CongestionLevel::None: return cp;
    case CongestionLevel::CL1: return kCpCl1;
    case CongestionLevel::CL2: return kCpCl2;
  }
  return cp;
}

// Trace spelling of the four codepoints.
constexpr const char* to_string(EcnCodepoint cp) {
  if (!cp.ce_bit) return cp.ect_bit ? "ECT1" : "NotECT";
  return cp.ect_bit ? "CL2" : "CL1";
}

constexpr const char* to_string(CongestionLevel l) {
  switch (l) {
    case CongestionLevel::None: return "None";
    case CongestionLevel::CL1: return "CL1";
    case CongestionLevel::CL2: return "CL2";
  }
  return "None";
}

// The TCP-side signal: the two congestion bits read in the context of the
// SYN and ACK flags.
struct TcpEcnSignal {
  bool ece_bit = false;  // bit 9
  bool cwr_bit = false;  // bit 8
  bool syn_flag = false;
  bool ack_flag = false;

  friend constexpr bool operator==(TcpEcnSignal, TcpEcnSignal) = default;
};

// Decoded meaning of a TCP signal. Combinations outside the defined row set
// decode to Undefined; endpoints treat Undefined as NotCapable, which
// fail-safes to plain behavior.
enum class TcpEecn : std::uint8_t {
  NotCapable,
  Capable,
  CL1Echo,
  CL2Echo,
  Cwr,
  Undefined,
};

constexpr TcpEecn decode_tcp_eecn(TcpEcnSignal s) {
  const bool on_control = s.syn_flag || s.ack_flag;
  if (!s.ece_bit && !s.cwr_bit) {
    return s.syn_flag ? TcpEecn::NotCapable : TcpEecn::Undefined;
  }
  if (!s.ece_bit && s.cwr_bit) {
    // On a pure data segment this pair means the window was reduced; on any
    // control packet it advertises capability.
    return on_control ? TcpEecn::Capable : TcpEecn::Cwr;
  }
  // ece set: echoes are defined only on packets with the ACK flag.
  if (!s.ack_flag) return TcpEecn::Undefined;
  return s.cwr_bit ? TcpEecn::CL2Echo : TcpEecn::CL1Echo;
}

constexpr const char* to_string(TcpEecn m) {
  switch (m) {
    case TcpEecn::NotCapable: return "NotCapable";
    case TcpEecn::Capable: return "Capable";
    case TcpEecn::CL1Echo: return "CL1Echo";
    case TcpEecn::CL2Echo: return "CL2Echo";
    case TcpEecn::Cwr: return "CWR";
    case TcpEecn::Undefined: return "Undefined";
  }
  return "Undefined";
}

}  // namespace eecn
