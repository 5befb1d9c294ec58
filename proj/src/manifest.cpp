#include "semitc/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#include "semitc/error.hpp"

namespace semitc {

namespace {

struct DigestContext {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  DigestContext() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("SHA-256 final failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }
};

nlohmann::json file_list(const std::vector<std::pair<std::string, std::string>>& files) {
  auto out = nlohmann::json::array();
  for (const auto& [path, hash] : files) out.push_back({{"path", path}, {"sha256", hash}});
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  DigestContext d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "' for hashing");
  DigestContext d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

void RunManifest::add_input(const std::string& path) { inputs.emplace_back(path, sha256_file(path)); }
void RunManifest::add_output(const std::string& path) { outputs.emplace_back(path, sha256_file(path)); }

nlohmann::json RunManifest::to_json() const {
  return {{"tool", "semitc"},
          {"tool_version", kToolVersion},
          {"subcommand", subcommand},
          {"config", config},
          {"config_sha256", sha256_hex(config.dump())},
          {"seed", seed},
          {"hash_algorithm", "sha256"},
          {"inputs", file_list(inputs)},
          {"outputs", file_list(outputs)},
          {"started_at", started_at},
          {"finished_at", finished_at}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string write_manifest(const std::string& artifact, const RunManifest& manifest) {
  const std::string path = artifact + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest '" + path + "'");
  out << manifest.to_json().dump(2) << '\n';
  return path;
}

}  // namespace semitc
