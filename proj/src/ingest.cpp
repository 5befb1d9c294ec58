#include "semitc/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "semitc/error.hpp"

namespace semitc {

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::uint32_t kMaxSnap = 256u * 1024u * 1024u;

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint16_t read_u16_be(const std::uint8_t* p) { return std::uint16_t(p[0] << 8 | p[1]); }

std::uint32_t read_u32_be(const std::uint8_t* p) {
  return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | std::uint32_t(p[3]);
}

}  // namespace

Capture parse_pcap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kGlobalHeaderSize)
    throw TruncatedCaptureError(bytes.size(), "pcap global header incomplete");
  const std::uint32_t magic = read_u32_le(bytes.data());
  bool swapped = false;
  Capture cap;
  if (magic == kMagicMicro || magic == kMagicNano) {
    cap.nanosecond = magic == kMagicNano;
  } else if (byteswap32(magic) == kMagicMicro || byteswap32(magic) == kMagicNano) {
    swapped = true;
    cap.nanosecond = byteswap32(magic) == kMagicNano;
  } else {
    throw UnsupportedFormatError("not a classic pcap file (bad magic number)");
  }

  auto u32 = [&](std::size_t off) {
    const auto v = read_u32_le(bytes.data() + off);
    return swapped ? byteswap32(v) : v;
  };
  cap.link_type = u32(20);
  const double frac_scale = cap.nanosecond ? 1e-9 : 1e-6;

  std::size_t off = kGlobalHeaderSize;
  while (off < bytes.size()) {
    if (bytes.size() - off < kRecordHeaderSize)
      throw TruncatedCaptureError(bytes.size(), "record header incomplete");
    const std::uint32_t ts_sec = u32(off);
    const std::uint32_t ts_frac = u32(off + 4);
    const std::uint32_t incl_len = u32(off + 8);
    const std::uint32_t orig_len = u32(off + 12);
    if (incl_len > kMaxSnap) throw UnsupportedFormatError("implausible record length " + std::to_string(incl_len));
    off += kRecordHeaderSize;
    if (bytes.size() - off < incl_len) throw TruncatedCaptureError(bytes.size(), "record data incomplete");
    RawPacket pkt;
    pkt.timestamp = static_cast<double>(ts_sec) + static_cast<double>(ts_frac) * frac_scale;
    pkt.link_payload.assign(bytes.begin() + off, bytes.begin() + off + incl_len);
    pkt.orig_len = std::max(orig_len, incl_len);
    cap.packets.push_back(std::move(pkt));
    off += incl_len;
  }
  return cap;
}

Capture read_pcap_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open capture '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pcap(bytes);
}

void DecodeCounters::count(SkipReason r) {
  switch (r) {
    case SkipReason::None: ++decoded; break;
    case SkipReason::NonIpv4: ++non_ipv4; break;
    case SkipReason::NonTcpUdp: ++non_tcp_udp; break;
    case SkipReason::Malformed: ++malformed; break;
    case SkipReason::Fragment: ++fragment; break;
  }
}

DecodeResult decode_packet(const RawPacket& raw) {
  const auto& b = raw.link_payload;
  DecodeResult r;
  if (b.size() < 14) return {SkipReason::Malformed, {}};
  std::size_t off = 12;
  std::uint16_t ethertype = read_u16_be(&b[off]);
  off += 2;
  if (ethertype == 0x8100) {
    if (b.size() < off + 4) return {SkipReason::Malformed, {}};
    ethertype = read_u16_be(&b[off + 2]);
    off += 4;
  }
  if (ethertype != 0x0800) return {SkipReason::NonIpv4, {}};

  const std::size_t avail = b.size() - off;
  if (avail < 20) return {SkipReason::Malformed, {}};
  const std::uint8_t* ip = &b[off];
  if ((ip[0] >> 4) != 4) return {SkipReason::NonIpv4, {}};
  const std::size_t header_len = std::size_t(ip[0] & 0x0f) * 4;
  const std::uint16_t total_len = read_u16_be(ip + 2);
  if (header_len < 20 || total_len < header_len || total_len > avail) return {SkipReason::Malformed, {}};

  const std::uint8_t proto = ip[9];
  if (proto != 6 && proto != 17) return {SkipReason::NonTcpUdp, {}};
  const std::uint16_t frag = read_u16_be(ip + 6);
  if ((frag & 0x1fff) != 0) return {SkipReason::Fragment, {}};
  if (total_len < header_len + 4) return {SkipReason::Malformed, {}};

  r.packet.tuple.src_addr = read_u32_be(ip + 12);
  r.packet.tuple.dst_addr = read_u32_be(ip + 16);
  r.packet.tuple.src_port = read_u16_be(ip + header_len);
  r.packet.tuple.dst_port = read_u16_be(ip + header_len + 2);
  r.packet.tuple.protocol = proto == 6 ? Protocol::Tcp : Protocol::Udp;
  r.packet.length = total_len;
  r.packet.timestamp = raw.timestamp;
  return r;
}

std::vector<Flow> assemble_flows(std::span<const DecodedPacket> packets, double idle_timeout) {
  if (!(idle_timeout > 0.0)) throw ConfigError("idle timeout must be positive");
  std::vector<std::size_t> order(packets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return packets[a].timestamp < packets[b].timestamp; });

  struct Open {
    std::size_t flow_index;
    double start;
    double last;
    std::size_t generation;
  };
  std::map<FiveTuple, Open> open;
  std::vector<Flow> flows;
  for (std::size_t i : order) {
    const auto& p = packets[i];
    const FiveTuple key = p.tuple.canonical();
    auto it = open.find(key);
    if (it != open.end() && p.timestamp - it->second.last > idle_timeout) {
      it->second.flow_index = SIZE_MAX;
    }
    if (it == open.end() || it->second.flow_index == SIZE_MAX) {
      const std::size_t generation = it == open.end() ? 0 : it->second.generation + 1;
      Flow f;
      f.tuple = p.tuple;
      f.id = to_string(p.tuple) + "#" + std::to_string(generation);
      flows.push_back(std::move(f));
      open.insert_or_assign(key, Open{flows.size() - 1, p.timestamp, p.timestamp, generation});
      it = open.find(key);
    }
    Flow& flow = flows[it->second.flow_index];
    const bool forward = p.tuple == flow.tuple;
    const int len = static_cast<int>(p.length);
    flow.packets.push_back({p.timestamp - it->second.start, forward ? len : -len});
    it->second.last = p.timestamp;
  }
  return flows;
}

std::vector<Flow> filter_short_flows(std::vector<Flow> flows, std::size_t min_packets) {
  if (min_packets < 1) throw ConfigError("min_packets must be at least 1");
  std::erase_if(flows, [&](const Flow& f) { return f.packets.size() < min_packets; });
  return flows;
}

IngestResult ingest_capture(const Capture& capture, double idle_timeout, std::size_t min_packets) {
  if (capture.link_type != kLinkTypeEthernet)
    throw UnsupportedFormatError("unsupported link type " + std::to_string(capture.link_type) +
                                 " (only Ethernet is supported)");
  IngestResult result;
  std::vector<DecodedPacket> decoded;
  decoded.reserve(capture.packets.size());
  for (const auto& raw : capture.packets) {
    auto d = decode_packet(raw);
    result.counters.count(d.skip);
    if (d) decoded.push_back(d.packet);
  }
  auto flows = assemble_flows(decoded, idle_timeout);
  result.assembled = flows.size();
  result.flows = filter_short_flows(std::move(flows), min_packets);
  return result;
}

}  // namespace semitc
