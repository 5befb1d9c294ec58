#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "semitc/error.hpp"
#include "semitc/flow.hpp"

using namespace semitc;

namespace {

Flow sample_flow(const std::string& id, std::optional<std::string> label, std::mt19937_64& gen) {
  Flow f;
  f.id = id;
  f.label = std::move(label);
  f.tuple = {0x0a000001u + static_cast<std::uint32_t>(gen() % 100), 0xc0a80001u,
             static_cast<std::uint16_t>(gen()), 443, gen() % 2 ? Protocol::Tcp : Protocol::Udp};
  double t = 0.0;
  f.packets.push_back({0.0, 500});
  for (int i = 0; i < 50; ++i) {
    t += std::uniform_real_distribution<double>(0.0, 0.3)(gen);
    const int len = 40 + static_cast<int>(gen() % 1400);
    f.packets.push_back({t, gen() % 2 ? len : -len});
  }
  return f;
}

std::vector<Flow> roundtrip(const std::vector<Flow>& flows) {
  std::stringstream ss;
  write_flows(ss, flows);
  return read_flows(ss);
}

}  // namespace

TEST(FiveTuple, CanonicalKeyIsDirectionInsensitive) {
  const FiveTuple a{1, 2, 10, 20, Protocol::Udp};
  EXPECT_EQ(a.canonical(), a.reversed().canonical());
  EXPECT_NE(a, a.reversed());
}

TEST(FiveTuple, FormatsAddresses) {
  EXPECT_EQ(format_ipv4(0xc0a80001u), "192.168.0.1");
  EXPECT_EQ(parse_ipv4("10.0.0.254"), 0x0a0000feu);
  EXPECT_THROW(parse_ipv4("10.0.0"), DataError);
  EXPECT_THROW(parse_ipv4("10.0.0.256"), DataError);
}

TEST(FlowFile, EmptyListWritesHeaderOnly) {
  std::stringstream ss;
  write_flows(ss, {});
  std::string line;
  ASSERT_TRUE(std::getline(ss, line));
  EXPECT_NE(line.find("semitc.flows"), std::string::npos);
  EXPECT_FALSE(std::getline(ss, line));
  EXPECT_TRUE(roundtrip({}).empty());
}

TEST(FlowFile, ThreeLabeledFlowsRoundTrip) {
  std::mt19937_64 gen(3);
  const std::vector<Flow> flows{sample_flow("a", "web", gen), sample_flow("b", "video", gen),
                                sample_flow("c", std::nullopt, gen)};
  EXPECT_EQ(roundtrip(flows), flows);
}

TEST(FlowFile, RoundTripKeepsFullDoublePrecision) {
  Flow f;
  f.id = "precise";
  f.packets = {{0.0, 100}, {0.1 + 0.2, -60}, {1.0 / 3.0, 1434}, {123456.789012345678, 40}};
  EXPECT_EQ(roundtrip({f}), std::vector<Flow>{f});
}

TEST(FlowFile, RandomFlowsRoundTrip) {
  std::mt19937_64 gen(17);
  std::vector<Flow> flows;
  for (int i = 0; i < 30; ++i) flows.push_back(sample_flow("f" + std::to_string(i), "x", gen));
  EXPECT_EQ(roundtrip(flows), flows);
}

TEST(FlowFile, HeaderIsOptional) {
  std::stringstream ss(
      R"({"v":1,"id":"x","tuple":{"src":"1.2.3.4","dst":"5.6.7.8","sport":1,"dport":2,"proto":"udp"},"label":null,"pkts":[[0,10],[0.5,-20]]})"
      "\n");
  const auto flows = read_flows(ss);
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flows[0].packets[1], (PacketEvent{0.5, -20}));
  EXPECT_EQ(flows[0].tuple.protocol, Protocol::Udp);
}

TEST(FlowFile, NegativeTimeNamesTheLine) {
  std::stringstream ss(
      "{\"schema\":\"semitc.flows\",\"v\":1}\n"
      R"({"v":1,"id":"x","tuple":{"src":"1.2.3.4","dst":"5.6.7.8","sport":1,"dport":2,"proto":"tcp"},"label":"a","pkts":[[0,10],[-1,20]]})"
      "\n");
  try {
    read_flows(ss);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(FlowFile, MalformedJsonNamesTheLine) {
  std::stringstream ss("{\"schema\":\"semitc.flows\",\"v\":1}\n\n{not json\n");
  try {
    read_flows(ss);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(FlowFile, UnknownVersionIsRejected) {
  std::stringstream header("{\"schema\":\"semitc.flows\",\"v\":2}\n");
  EXPECT_THROW(read_flows(header), VersionError);
  std::stringstream record(
      R"({"v":9,"id":"x","tuple":{"src":"1.2.3.4","dst":"5.6.7.8","sport":1,"dport":2,"proto":"tcp"},"label":null,"pkts":[[0,10]]})"
      "\n");
  EXPECT_THROW(read_flows(record), VersionError);
}

TEST(FlowFile, MissingFileIsDataError) { EXPECT_THROW(read_flows_file("/nonexistent/flows.jsonl"), DataError); }

TEST(ValidateFlow, DetectsViolations) {
  Flow f;
  f.id = "v";
  EXPECT_TRUE(validate(f).has_value());
  f.packets = {{0.0, 10}, {1.0, -5}};
  EXPECT_FALSE(validate(f).has_value());
  f.packets[0].signed_length = -10;
  EXPECT_TRUE(validate(f).has_value());
  f.packets = {{0.0, 10}, {1.0, 0}};
  EXPECT_TRUE(validate(f).has_value());
  f.packets = {{0.0, 10}, {2.0, 5}, {1.0, 5}};
  EXPECT_TRUE(validate(f).has_value());
  f.packets = {{0.5, 10}};
  EXPECT_TRUE(validate(f).has_value());
}
