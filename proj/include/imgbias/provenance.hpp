#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/scan.hpp"

namespace imgbias {

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("CryptoError", "SHA-256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> data) {
    EVP_DigestUpdate(ctx_, data.data(), data.size());
    return *this;
  }
  Sha256& update(const std::string& s) {
    return update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::span<const std::uint8_t> data) { return Sha256().update(data).hex(); }
inline std::string sha256_hex(const std::string& s) { return Sha256().update(s).hex(); }

/// Digest of a file, or of a directory as the hash of "<relpath>\t<sha256>\n"
/// lines over its regular files in path order.
inline std::string digest_path(const std::filesystem::path& p) {
  if (std::filesystem::is_directory(p)) {
    Sha256 h;
    for (const auto& f : list_files(p)) {
      const auto rel = std::filesystem::path(f).lexically_relative(p).generic_string();
      h.update(rel + "\t" + sha256_hex(read_file(f)) + "\n");
    }
    return h.hex();
  }
  return sha256_hex(read_file(p));
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance written next to every stage's outputs as run.json. Only the
/// timestamp varies between identical runs.
struct RunRecord {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_sha256;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path relative to out dir, digest

  void add_input(const std::filesystem::path& p) { inputs.emplace_back(p.generic_string(), digest_path(p)); }
  void add_output(const std::filesystem::path& out_dir, const std::filesystem::path& p) {
    outputs.emplace_back(p.lexically_relative(out_dir).generic_string(), digest_path(p));
  }

  void write(const std::filesystem::path& out_dir) const {
    nlohmann::ordered_json j;
    j["tool"] = "imgbias";
    j["command"] = command;
    j["seed"] = seed;
    j["config_sha256"] = config_sha256;
    auto list = [](const auto& v) {
      nlohmann::ordered_json a = nlohmann::ordered_json::array();
      for (const auto& [p, d] : v) a.push_back({{"path", p}, {"sha256", d}});
      return a;
    };
    j["inputs"] = list(inputs);
    j["outputs"] = list(outputs);
    j["timestamp"] = utc_timestamp();
    const std::string text = j.dump(2) + "\n";
    write_file(out_dir / "run.json",
               std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
};

}  // namespace imgbias
