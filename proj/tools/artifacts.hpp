#pragma once

// Output directory bookkeeping: every file written through ArtifactDir is
// hashed, and finish() emits manifest.json listing them with the seed and
// config hash.

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lmf/error.hpp"

namespace lmf::cli {

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += hex[digest[i] >> 4], out += hex[digest[i] & 15];
  return out;
}

/// Shortest round-trip decimal form; empty for NaN so CSV cells stay blank.
inline std::string num(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return {buf, end};
}

/// Row-oriented CSV with a fixed header.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  Csv& cell(const std::string& s) {
    if (open_ > 0) buf_ << ',';
    buf_ << s;
    if (++open_ == columns_) buf_ << '\n', open_ = 0;
    return *this;
  }
  Csv& cell(double v) { return cell(num(v)); }
  Csv& cell(std::int64_t v) { return cell(std::to_string(v)); }
  Csv& cell(std::size_t v) { return cell(std::to_string(v)); }
  Csv& cell(int v) { return cell(std::to_string(v)); }

  std::string str() const { return buf_.str(); }

 private:
  void row_strings(const std::vector<std::string>& r) {
    for (const auto& s : r) cell(s);
  }
  std::size_t columns_;
  std::size_t open_ = 0;
  std::ostringstream buf_;
};

class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory '" + root_.string() + "': " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& name, const std::string& content) {
    auto path = root_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    files_[name] = {sha256_hex(content), content.size()};
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  /// `config` is the effective experiment configuration; its hash excludes
  /// nothing but what the caller already left out.
  void finish(const std::string& command, std::uint64_t seed, const nlohmann::json& config) {
    nlohmann::json m;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = config;
    m["config_sha256"] = sha256_hex(config.dump());
    for (const auto& [name, f] : files_) m["files"][name] = {{"sha256", f.first}, {"bytes", f.second}};
    auto text = m.dump(2) + "\n";
    std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest.json");
    out << text;
  }

 private:
  std::filesystem::path root_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

}  // namespace lmf::cli
