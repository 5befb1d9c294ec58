#include "semitc/flow.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "semitc/error.hpp"

namespace semitc {

using nlohmann::json;

FiveTuple FiveTuple::canonical() const {
  const FiveTuple r = reversed();
  return r < *this ? r : *this;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xff) + "." +
         std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

std::uint32_t parse_ipv4(const std::string& text) {
  std::uint32_t addr = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || next == p || value > 255)
      throw DataError("invalid IPv4 address '" + text + "'");
    addr = (addr << 8) | value;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') throw DataError("invalid IPv4 address '" + text + "'");
      ++p;
    }
  }
  if (p != end) throw DataError("invalid IPv4 address '" + text + "'");
  return addr;
}

std::string to_string(const FiveTuple& t) {
  return format_ipv4(t.src_addr) + ":" + std::to_string(t.src_port) + "-" + format_ipv4(t.dst_addr) + ":" +
         std::to_string(t.dst_port) + "-" + (t.protocol == Protocol::Tcp ? "tcp" : "udp");
}

std::optional<std::string> validate(const Flow& flow) {
  if (flow.packets.empty()) return "flow has no packets";
  if (flow.packets.front().rel_time != 0.0) return "first packet rel_time must be 0";
  if (flow.packets.front().signed_length <= 0) return "first packet must be in the forward direction";
  double prev = 0.0;
  for (std::size_t i = 0; i < flow.packets.size(); ++i) {
    const auto& p = flow.packets[i];
    if (!std::isfinite(p.rel_time) || p.rel_time < 0.0)
      return "packet " + std::to_string(i) + " has negative or non-finite rel_time";
    if (p.rel_time < prev) return "packet " + std::to_string(i) + " rel_time decreases";
    if (p.signed_length == 0) return "packet " + std::to_string(i) + " has zero length";
    prev = p.rel_time;
  }
  return std::nullopt;
}

namespace {

json flow_to_json(const Flow& f) {
  json pkts = json::array();
  for (const auto& p : f.packets) pkts.push_back(json::array({p.rel_time, p.signed_length}));
  return json{
      {"v", kFlowFileVersion},
      {"id", f.id},
      {"tuple",
       {{"src", format_ipv4(f.tuple.src_addr)},
        {"dst", format_ipv4(f.tuple.dst_addr)},
        {"sport", f.tuple.src_port},
        {"dport", f.tuple.dst_port},
        {"proto", f.tuple.protocol == Protocol::Tcp ? "tcp" : "udp"}}},
      {"label", f.label ? json(*f.label) : json(nullptr)},
      {"pkts", std::move(pkts)},
  };
}

template <class T>
T port_from(const json& j, const char* key) {
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 0 || v > 65535) throw DataError(std::string("port '") + key + "' out of range");
  return static_cast<T>(v);
}

Flow flow_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  const auto version = j.at("v").get<int>();
  if (version != kFlowFileVersion)
    throw VersionError("unsupported flow file schema version " + std::to_string(version));
  Flow f;
  f.id = j.at("id").get<std::string>();
  const auto& t = j.at("tuple");
  f.tuple.src_addr = parse_ipv4(t.at("src").get<std::string>());
  f.tuple.dst_addr = parse_ipv4(t.at("dst").get<std::string>());
  f.tuple.src_port = port_from<std::uint16_t>(t, "sport");
  f.tuple.dst_port = port_from<std::uint16_t>(t, "dport");
  const auto proto = t.at("proto").get<std::string>();
  if (proto == "tcp")
    f.tuple.protocol = Protocol::Tcp;
  else if (proto == "udp")
    f.tuple.protocol = Protocol::Udp;
  else
    throw DataError("unknown protocol '" + proto + "'");
  const auto& label = j.at("label");
  if (!label.is_null()) f.label = label.get<std::string>();
  for (const auto& p : j.at("pkts")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number_integer())
      throw DataError("packet entry must be [rel_time, signed_length]");
    f.packets.push_back({p[0].get<double>(), p[1].get<int>()});
  }
  if (auto problem = validate(f)) throw DataError(*problem);
  return f;
}

}  // namespace

void write_flows(std::ostream& out, const std::vector<Flow>& flows) {
  out << json{{"schema", "semitc.flows"}, {"v", kFlowFileVersion}}.dump() << '\n';
  for (const auto& f : flows) out << flow_to_json(f).dump() << '\n';
}

std::vector<Flow> read_flows(std::istream& in) {
  std::vector<Flow> flows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      auto record = json::parse(line);
      if (record.is_object() && record.contains("schema")) {
        const auto version = record.at("v").get<int>();
        if (version != kFlowFileVersion)
          throw VersionError("unsupported flow file schema version " + std::to_string(version));
        continue;
      }
      flows.push_back(flow_from_json(record));
    } catch (const VersionError& e) {
      throw VersionError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return flows;
}

void write_flows_file(const std::string& path, const std::vector<Flow>& flows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_flows(out, flows);
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<Flow> read_flows_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open flow file '" + path + "'");
  return read_flows(in);
}

}  // namespace semitc
