#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semitc/flow.hpp"

namespace semitc {

struct RawPacket {
  double timestamp = 0.0;  // seconds since the capture epoch
  std::vector<std::uint8_t> link_payload;
  std::uint32_t orig_len = 0;
};

struct Capture {
  std::uint32_t link_type = 0;  // 1 = Ethernet
  bool nanosecond = false;
  std::vector<RawPacket> packets;
};

inline constexpr std::uint32_t kLinkTypeEthernet = 1;

/// Parses a classic libpcap file (either byte order, micro- or nanosecond timestamps).
Capture parse_pcap(std::span<const std::uint8_t> bytes);
Capture read_pcap_file(const std::string& path);

enum class SkipReason { None, NonIpv4, NonTcpUdp, Malformed, Fragment };

struct DecodedPacket {
  FiveTuple tuple;
  std::uint32_t length = 0;  // IPv4 total length
  double timestamp = 0.0;
};

struct DecodeResult {
  SkipReason skip = SkipReason::None;
  DecodedPacket packet;

  explicit operator bool() const noexcept { return skip == SkipReason::None; }
};

struct DecodeCounters {
  std::size_t decoded = 0;
  std::size_t non_ipv4 = 0;
  std::size_t non_tcp_udp = 0;
  std::size_t malformed = 0;
  std::size_t fragment = 0;

  void count(SkipReason r);
  std::size_t skipped() const { return non_ipv4 + non_tcp_udp + malformed + fragment; }
};

/// Ethernet (optionally one 802.1Q tag) -> IPv4 -> TCP/UDP.
DecodeResult decode_packet(const RawPacket& raw);

/// Groups packets by direction-insensitive 5-tuple, splitting a key whenever the
/// gap between consecutive packets exceeds idle_timeout. Packets are processed in
/// timestamp order (stable for equal timestamps). Flows are returned in order of
/// their first packet.
std::vector<Flow> assemble_flows(std::span<const DecodedPacket> packets, double idle_timeout = 60.0);

/// Keeps flows with at least min_packets packets, preserving order.
std::vector<Flow> filter_short_flows(std::vector<Flow> flows, std::size_t min_packets = 100);

struct IngestResult {
  std::vector<Flow> flows;  // after filtering
  std::size_t assembled = 0;
  DecodeCounters counters;
};

IngestResult ingest_capture(const Capture& capture, double idle_timeout, std::size_t min_packets);

}  // namespace semitc
