#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "ingest_fixture.hpp"
#include "pcap_builder.hpp"
#include "semitc/error.hpp"
#include "semitc/ingest.hpp"

using namespace semitc;
using semitc::fixtures::FrameSpec;
using semitc::fixtures::make_frame;
using semitc::fixtures::PcapBuilder;

namespace {

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  std::string digits;
  for (char c : hex)
    if (std::isxdigit(static_cast<unsigned char>(c))) digits += c;
  for (std::size_t i = 0; i + 1 < digits.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(digits.substr(i, 2), nullptr, 16)));
  return out;
}

DecodedPacket pkt(std::uint32_t src, std::uint16_t sport, std::uint32_t dst, std::uint16_t dport, std::uint32_t len,
                  double t, Protocol proto = Protocol::Udp) {
  return {FiveTuple{src, dst, sport, dport, proto}, len, t};
}

}  // namespace

TEST(ParsePcap, EmptyCaptureHasNoPackets) {
  PcapBuilder b;
  const Capture c = parse_pcap(b.bytes());
  EXPECT_EQ(c.link_type, kLinkTypeEthernet);
  EXPECT_TRUE(c.packets.empty());
}

TEST(ParsePcap, ByteSwappedHeaderAgainstHexFixture) {
  // Big-endian file: magic a1b2c3d4 read little-endian gives d4c3b2a1.
  // One 60-byte record at 1.000250 s, orig_len 74.
  std::string hex =
      "a1b2c3d4 0002 0004 00000000 00000000 0000ffff 00000001"
      "00000001 000000fa 0000003c 0000004a";
  for (int i = 0; i < 60; ++i) hex += (i == 0 ? "7f" : "00");
  const Capture c = parse_pcap(from_hex(hex));
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_DOUBLE_EQ(c.packets[0].timestamp, 1.000250);
  EXPECT_EQ(c.packets[0].link_payload.size(), 60u);
  EXPECT_EQ(c.packets[0].link_payload[0], 0x7f);
  EXPECT_EQ(c.packets[0].orig_len, 74u);
}

TEST(ParsePcap, BuilderSwappedMatchesNative) {
  const auto frame = make_frame({});
  PcapBuilder native, swapped(true);
  native.record(5, 100, frame);
  swapped.record(5, 100, frame);
  const auto a = parse_pcap(native.bytes()), b = parse_pcap(swapped.bytes());
  ASSERT_EQ(a.packets.size(), 1u);
  ASSERT_EQ(b.packets.size(), 1u);
  EXPECT_EQ(a.packets[0].link_payload, b.packets[0].link_payload);
  EXPECT_EQ(a.packets[0].timestamp, b.packets[0].timestamp);
}

TEST(ParsePcap, NanosecondTimestamps) {
  PcapBuilder b(false, true);
  b.record(2, 500000000, make_frame({}));
  const Capture c = parse_pcap(b.bytes());
  EXPECT_TRUE(c.nanosecond);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_DOUBLE_EQ(c.packets[0].timestamp, 2.5);
}

TEST(ParsePcap, ShortFileIsTruncatedAtItsLength) {
  const std::vector<std::uint8_t> ten(10, 0xd4);
  try {
    parse_pcap(ten);
    FAIL() << "expected TruncatedCaptureError";
  } catch (const TruncatedCaptureError& e) {
    EXPECT_EQ(e.offset(), 10u);
  }
}

TEST(ParsePcap, TruncatedRecordReportsOffset) {
  PcapBuilder b;
  b.record(0, 0, make_frame({}));
  auto bytes = b.bytes();
  bytes.resize(bytes.size() - 3);
  try {
    parse_pcap(bytes);
    FAIL() << "expected TruncatedCaptureError";
  } catch (const TruncatedCaptureError& e) {
    EXPECT_EQ(e.offset(), bytes.size());
  }
}

TEST(ParsePcap, BadMagicIsUnsupported) {
  std::vector<std::uint8_t> bytes(24, 0);
  bytes[0] = 0x0a;
  bytes[1] = 0x0d;
  bytes[2] = 0x0d;
  bytes[3] = 0x0a;  // pcapng section header
  EXPECT_THROW(parse_pcap(bytes), UnsupportedFormatError);
}

TEST(DecodePacket, ArpIsNonIpv4) {
  FrameSpec f;
  f.ethertype = 0x0806;
  const auto r = decode_packet({0.0, make_frame(f), 0});
  EXPECT_EQ(r.skip, SkipReason::NonIpv4);
}

TEST(DecodePacket, UdpLengthIsIpTotalLength) {
  FrameSpec f;
  f.total_length = 1378;
  f.src = 0xc0a80102;
  f.sport = 5353;
  const auto frame = make_frame(f);
  // Manual header-field read: IPv4 total length sits at Ethernet(14) + 2.
  const std::uint32_t manual = (std::uint32_t{frame[16]} << 8) | frame[17];
  ASSERT_EQ(manual, 1378u);
  const auto r = decode_packet({3.5, frame, 0});
  ASSERT_TRUE(r);
  EXPECT_EQ(r.packet.length, manual);
  EXPECT_EQ(r.packet.tuple.src_addr, 0xc0a80102u);
  EXPECT_EQ(r.packet.tuple.src_port, 5353);
  EXPECT_EQ(r.packet.tuple.dst_port, 443);
  EXPECT_EQ(r.packet.tuple.protocol, Protocol::Udp);
  EXPECT_EQ(r.packet.timestamp, 3.5);
}

TEST(DecodePacket, TcpBehindVlanTag) {
  FrameSpec f;
  f.proto = 6;
  f.vlan = true;
  f.total_length = 600;
  const auto r = decode_packet({0.0, make_frame(f), 0});
  ASSERT_TRUE(r);
  EXPECT_EQ(r.packet.tuple.protocol, Protocol::Tcp);
  EXPECT_EQ(r.packet.length, 600u);
}

TEST(DecodePacket, HeaderLengthBelowMinimumIsMalformed) {
  FrameSpec f;
  f.proto = 6;
  f.ihl_words = 4;
  EXPECT_EQ(decode_packet({0.0, make_frame(f), 0}).skip, SkipReason::Malformed);
}

TEST(DecodePacket, TotalLengthBeyondCapturedDataIsMalformed) {
  FrameSpec f;
  f.total_length = 1400;
  f.truncate = true;
  EXPECT_EQ(decode_packet({0.0, make_frame(f), 0}).skip, SkipReason::Malformed);
}

TEST(DecodePacket, IcmpIsNonTcpUdp) {
  FrameSpec f;
  f.proto = 1;
  EXPECT_EQ(decode_packet({0.0, make_frame(f), 0}).skip, SkipReason::NonTcpUdp);
}

TEST(DecodePacket, NonInitialFragmentIsSkipped) {
  FrameSpec f;
  f.frag = 0x0010;
  EXPECT_EQ(decode_packet({0.0, make_frame(f), 0}).skip, SkipReason::Fragment);
}

TEST(AssembleFlows, ReplyIsBackward) {
  const std::vector<DecodedPacket> p{pkt(1, 10, 2, 20, 100, 5.0), pkt(2, 20, 1, 10, 300, 6.0)};
  const auto flows = assemble_flows(p, 60.0);
  ASSERT_EQ(flows.size(), 1u);
  ASSERT_EQ(flows[0].packets.size(), 2u);
  EXPECT_EQ(flows[0].packets[0], (PacketEvent{0.0, 100}));
  EXPECT_EQ(flows[0].packets[1], (PacketEvent{1.0, -300}));
}

TEST(AssembleFlows, IdleGapSplitsFlow) {
  const std::vector<DecodedPacket> p{pkt(1, 10, 2, 20, 100, 0.0), pkt(1, 10, 2, 20, 100, 120.0)};
  const auto flows = assemble_flows(p, 60.0);
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].packets.size(), 1u);
  EXPECT_EQ(flows[1].packets.size(), 1u);
  EXPECT_NE(flows[0].id, flows[1].id);
}

TEST(AssembleFlows, GapEqualToTimeoutDoesNotSplit) {
  const std::vector<DecodedPacket> p{pkt(1, 10, 2, 20, 100, 0.0), pkt(1, 10, 2, 20, 100, 60.0)};
  EXPECT_EQ(assemble_flows(p, 60.0).size(), 1u);
}

TEST(AssembleFlows, EmptyInput) { EXPECT_TRUE(assemble_flows({}, 60.0).empty()); }

TEST(AssembleFlows, MatchesBruteForceGrouping) {
  std::mt19937 gen(11);
  const std::array<std::pair<std::uint32_t, std::uint16_t>, 4> hosts{{{1, 100}, {2, 200}, {3, 300}, {4, 400}}};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DecodedPacket> trace;
    double t = 0.0;
    for (int i = 0; i < 20; ++i) {
      t += std::uniform_real_distribution<double>(0.0, 40.0)(gen);
      const auto a = hosts[gen() % 2], b = hosts[2 + gen() % 2];
      const bool reverse = gen() % 2;
      const auto& s = reverse ? b : a;
      const auto& d = reverse ? a : b;
      trace.push_back(pkt(s.first, s.second, d.first, d.second, 40 + gen() % 1000, t));
    }
    // Oracle: walk packets in order, keep an open flow per unordered endpoint pair.
    struct Open {
      std::uint32_t first_src;
      std::uint16_t first_sport;
      double start, last;
      std::vector<PacketEvent> events;
    };
    std::map<std::pair<std::uint64_t, std::uint64_t>, Open> open;
    std::vector<std::pair<double, std::vector<PacketEvent>>> expected;
    auto endpoint = [](std::uint32_t a, std::uint16_t p) { return (std::uint64_t{a} << 16) | p; };
    for (const auto& p : trace) {
      auto e1 = endpoint(p.tuple.src_addr, p.tuple.src_port), e2 = endpoint(p.tuple.dst_addr, p.tuple.dst_port);
      const auto key = std::make_pair(std::min(e1, e2), std::max(e1, e2));
      auto it = open.find(key);
      if (it != open.end() && p.timestamp - it->second.last > 30.0) {
        expected.emplace_back(it->second.start, it->second.events);
        open.erase(it);
        it = open.end();
      }
      if (it == open.end())
        it = open.emplace(key, Open{p.tuple.src_addr, p.tuple.src_port, p.timestamp, p.timestamp, {}}).first;
      const bool fwd = p.tuple.src_addr == it->second.first_src && p.tuple.src_port == it->second.first_sport;
      it->second.events.push_back({p.timestamp - it->second.start, fwd ? int(p.length) : -int(p.length)});
      it->second.last = p.timestamp;
    }
    for (auto& [k, o] : open) expected.emplace_back(o.start, o.events);
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const auto flows = assemble_flows(trace, 30.0);
    ASSERT_EQ(flows.size(), expected.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      EXPECT_EQ(flows[i].packets, expected[i].second);
      EXPECT_GT(flows[i].packets.front().signed_length, 0);
      total += flows[i].packets.size();
    }
    EXPECT_EQ(total, trace.size());
  }
}

TEST(AssembleFlows, OutOfOrderTimestampsAreSorted) {
  const std::vector<DecodedPacket> p{pkt(1, 10, 2, 20, 200, 2.0), pkt(2, 20, 1, 10, 100, 1.0)};
  const auto flows = assemble_flows(p, 60.0);
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flows[0].packets[0], (PacketEvent{0.0, 100}));
  EXPECT_EQ(flows[0].packets[1], (PacketEvent{1.0, -200}));
}

namespace {

Flow flow_of(std::size_t n) {
  Flow f;
  f.id = "f" + std::to_string(n);
  for (std::size_t i = 0; i < n; ++i) f.packets.push_back({double(i), 100});
  return f;
}

}  // namespace

TEST(FilterShortFlows, Boundary) {
  EXPECT_TRUE(filter_short_flows({flow_of(99)}, 100).empty());
  EXPECT_EQ(filter_short_flows({flow_of(100)}, 100).size(), 1u);
}

TEST(FilterShortFlows, MinOneIsIdentity) {
  const std::vector<Flow> flows{flow_of(1), flow_of(5), flow_of(2)};
  EXPECT_EQ(filter_short_flows(flows, 1), flows);
}

TEST(FilterShortFlows, IdempotentAndMonotone) {
  std::vector<Flow> flows;
  for (std::size_t n : {3, 150, 99, 100, 7, 400, 101}) flows.push_back(flow_of(n));
  const auto once = filter_short_flows(flows, 100);
  EXPECT_EQ(filter_short_flows(once, 100), once);
  const auto stricter = filter_short_flows(flows, 150);
  for (const auto& f : stricter) EXPECT_NE(std::find(once.begin(), once.end(), f), once.end());
  ASSERT_EQ(once.size(), 4u);
  EXPECT_EQ(once[0].id, "f150");
  EXPECT_EQ(once[3].id, "f101");
}

TEST(FilterShortFlows, ZeroThresholdIsConfigError) { EXPECT_THROW(filter_short_flows({}, 0), ConfigError); }

TEST(IngestCapture, CountsSkipsAndConservesPackets) {
  PcapBuilder b;
  FrameSpec arp;
  arp.ethertype = 0x0806;
  FrameSpec bad;
  bad.ihl_words = 3;
  FrameSpec a, r;
  r.src = a.dst;
  r.dst = a.src;
  r.sport = a.dport;
  r.dport = a.sport;
  b.record(0, 0, make_frame(a));
  b.record(0, 1000, make_frame(arp));
  b.record(0, 2000, make_frame(r));
  b.record(0, 3000, make_frame(bad));
  const auto res = ingest_capture(parse_pcap(b.bytes()), 60.0, 1);
  EXPECT_EQ(res.counters.decoded, 2u);
  EXPECT_EQ(res.counters.non_ipv4, 1u);
  EXPECT_EQ(res.counters.malformed, 1u);
  ASSERT_EQ(res.flows.size(), 1u);
  EXPECT_EQ(res.flows[0].packets.size(), 2u);
  EXPECT_LT(res.flows[0].packets[1].signed_length, 0);
}

TEST(IngestCapture, NonEthernetLinkTypeIsUnsupported) {
  PcapBuilder b(false, false, 101);
  EXPECT_THROW(ingest_capture(parse_pcap(b.bytes()), 60.0, 1), UnsupportedFormatError);
}

TEST(IngestCapture, InterleavedTuplesMatchHandFixture) {
  using fixtures::InterleavedCapture;
  const auto res = ingest_capture(parse_pcap(InterleavedCapture::pcap()), 60.0, 1);
  EXPECT_EQ(res.counters.decoded, 200u);
  const auto& expected = fixtures::interleaved_expected_flows();
  ASSERT_EQ(res.flows.size(), expected.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Flow& f = res.flows[i];
    const auto& e = expected[i];
    total += f.size();
    EXPECT_EQ(f.size(), e.packets) << i;
    std::size_t backward = 0;
    for (const auto& p : f.packets) backward += p.signed_length < 0;
    EXPECT_EQ(backward, e.backward) << i;
    EXPECT_EQ(f.packets.front().signed_length, e.first_length) << i;
    EXPECT_DOUBLE_EQ(f.packets.back().rel_time, e.last_rel_time) << i;
    const FiveTuple init = {InterleavedCapture::initiator(e.tuple).src, InterleavedCapture::initiator(e.tuple).dst,
                            InterleavedCapture::initiator(e.tuple).sport, InterleavedCapture::initiator(e.tuple).dport,
                            e.tuple % 2 == 0 ? Protocol::Udp : Protocol::Tcp};
    EXPECT_EQ(f.tuple, e.starts_with_responder ? init.reversed() : init) << i;
  }
  EXPECT_EQ(total, res.counters.decoded);
  EXPECT_EQ(ingest_capture(parse_pcap(InterleavedCapture::pcap()), 200.0, 1).flows.size(), 6u);
}
