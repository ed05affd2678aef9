// include/eecn/sim_time.hpp
// Simulation clock: integer nanoseconds end to end, converted to seconds
// only at the metrics boundary. Integer ticks keep event ordering exact
// and runs bit-reproducible.

#pragma once

#include <cmath>
#include <cstdint>

namespace eecn {

using SimTime = std::int64_t;  // nanoseconds

inline constexpr SimTime kNsPerSec = 1'000'000'000;
inline constexpr SimTime kNsPerMs = 1'000'000;

constexpr SimTime from_millis(std::int64_t ms) { return ms * kNsPerMs; }

inline SimTime from_seconds(double s) {
  return static_cast<SimTime>(std::llround(s * 1e9));
}

constexpr double to_seconds(SimTime t) {
  return static_cast<double>(t) / 1e9;
}

// Wire time of a packet on a link: 8 * bytes / rate.
inline SimTime transmit_time(std::uint64_t bytes, double rate_bps) {
  return static_cast<SimTime>(std::llround(static_cast<double>(bytes) * 8.0 * 1e9 / rate_bps));
}

}  // namespace eecn
