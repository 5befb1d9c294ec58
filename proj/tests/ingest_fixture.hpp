#pragma once

#include <cstdint>
#include <vector>

#include "pcap_builder.hpp"

namespace semitc::fixtures {

/// 200 packets over six 5-tuples, sent round-robin (packet k belongs to tuple k % 6)
/// one second apart, with a 100 s pause before packet 100. Every third exchange of a
/// tuple (occurrence k / 6 with remainder 2 mod 3) is sent by the responder. Even
/// tuples are UDP, odd tuples TCP; the IPv4 total length of packet k is 60 + k.
struct InterleavedCapture {
  static constexpr int kPackets = 200;
  static constexpr int kTuples = 6;
  static constexpr double kPause = 100.0;

  static FrameSpec initiator(int tuple) {
    FrameSpec f;
    f.src = 0x0a000001u + static_cast<std::uint32_t>(tuple);
    f.dst = 0x0a000101u;
    f.sport = static_cast<std::uint16_t>(1000 + tuple);
    f.dport = 443;
    f.proto = tuple % 2 == 0 ? 17 : 6;
    return f;
  }

  static bool from_responder(int k) { return (k / kTuples) % 3 == 2; }
  static double time_of(int k) { return k + (k >= 100 ? kPause : 0.0); }

  static std::vector<std::uint8_t> pcap() {
    PcapBuilder b;
    for (int k = 0; k < kPackets; ++k) {
      FrameSpec f = initiator(k % kTuples);
      if (from_responder(k)) {
        std::swap(f.src, f.dst);
        std::swap(f.sport, f.dport);
      }
      f.total_length = static_cast<std::uint16_t>(60 + k);
      const double t = time_of(k);
      b.record(static_cast<std::uint32_t>(t), 0, make_frame(f));
    }
    return b.bytes();
  }
};

/// Hand-derived flows for a 60 s idle timeout, in order of first packet.
struct ExpectedFlow {
  int tuple;
  bool starts_with_responder;
  std::size_t packets;
  std::size_t backward;
  int first_length;      // IPv4 total length of the flow's first packet
  double last_rel_time;  // seconds
};

inline const std::vector<ExpectedFlow>& interleaved_expected_flows() {
  static const std::vector<ExpectedFlow> flows{
      // before the pause: k = 0..99
      {0, false, 17, 5, 60, 96.0},
      {1, false, 17, 5, 61, 96.0},
      {2, false, 17, 5, 62, 96.0},
      {3, false, 17, 5, 63, 96.0},
      {4, false, 16, 5, 64, 90.0},
      {5, false, 16, 5, 65, 90.0},
      // after the pause: k = 100..199
      {4, false, 17, 6, 160, 96.0},
      {5, false, 17, 6, 161, 96.0},
      {0, true, 17, 11, 162, 96.0},
      {1, true, 17, 11, 163, 96.0},
      {2, true, 16, 10, 164, 90.0},
      {3, true, 16, 10, 165, 90.0},
  };
  return flows;
}

}  // namespace semitc::fixtures
