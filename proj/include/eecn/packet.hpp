// include/eecn/packet.hpp

#pragma once

#include <cstdint>

#include "eecn/codepoint.hpp"
#include "eecn/sim_time.hpp"

namespace eecn {

inline constexpr std::uint32_t kHeaderBytes = 40;  // IP + TCP, no options

enum class FlowClass : std::uint8_t { Elephant, Short };

constexpr const char* to_string(FlowClass c) {
  return c == FlowClass::Elephant ? "elephant" : "short";
}

// One simulated segment. Sequence numbers are byte offsets into the flow's
// application stream; a pure ACK has payload == 0.
struct Packet {
  std::uint64_t id = 0;
  std::uint32_t flow = 0;
  std::uint32_t src_node = 0;
  std::uint32_t dst_node = 0;

  bool syn = false;
  bool ack = false;
  std::uint64_t seq = 0;
  std::uint64_t ack_no = 0;
  std::uint32_t payload = 0;

  EcnCodepoint cp{};       // IP congestion field
  bool ece = false;        // TCP bit 9
  bool cwr = false;        // TCP bit 8

  SimTime first_sent = 0;  // original transmission (kept across retransmits)
  SimTime sent = 0;        // this transmission
  bool retransmit = false;

  std::uint32_t wire_size() const { return payload + kHeaderBytes; }
  TcpEcnSignal tcp_signal() const { return {ece, cwr, syn, ack}; }
  bool is_data() const { return payload > 0; }
  bool is_pure_ack() const { return !syn && ack && payload == 0; }
};

}  // namespace eecn
