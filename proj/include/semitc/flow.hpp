#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace semitc {

enum class Protocol : std::uint8_t { Tcp = 6, Udp = 17 };

struct FiveTuple {
  std::uint32_t src_addr = 0;  // host byte order
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::Tcp;

  /// The same tuple seen from the other endpoint.
  FiveTuple reversed() const { return {dst_addr, src_addr, dst_port, src_port, protocol}; }

  /// Direction-insensitive key: the lexicographically smaller of (this, reversed()).
  FiveTuple canonical() const;

  friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

std::string format_ipv4(std::uint32_t addr);
std::uint32_t parse_ipv4(const std::string& text);  // throws DataError
std::string to_string(const FiveTuple& t);

struct PacketEvent {
  double rel_time = 0.0;   // seconds since the flow's first packet
  int signed_length = 0;   // bytes; > 0 forward, < 0 backward

  friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

struct Flow {
  std::string id;
  FiveTuple tuple;
  std::vector<PacketEvent> packets;
  std::optional<std::string> label;

  std::size_t size() const noexcept { return packets.size(); }
  friend bool operator==(const Flow&, const Flow&) = default;
};

/// Checks the flow invariants: nonempty, first event at time 0 and forward,
/// times non-decreasing and non-negative, no zero lengths. Returns a message
/// describing the first violation, or nullopt.
std::optional<std::string> validate(const Flow& flow);

inline constexpr int kFlowFileVersion = 1;

/// Canonical flow file: a header line {"schema":"semitc.flows","v":1} followed
/// by one JSON object per flow. The header is optional on read.
void write_flows(std::ostream& out, const std::vector<Flow>& flows);
std::vector<Flow> read_flows(std::istream& in);

void write_flows_file(const std::string& path, const std::vector<Flow>& flows);
std::vector<Flow> read_flows_file(const std::string& path);

}  // namespace semitc
