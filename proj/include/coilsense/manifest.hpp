#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coilsense/errors.hpp"
#include "coilsense/textio.hpp"

namespace coilsense {

inline constexpr const char* kManifestMagic = "# coilsense manifest v1";

inline std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Ordered key-value store with a canonical text form. Every experiment is
/// fully described by one of these; replaying a manifest reproduces the run
/// byte for byte. The only volatile content is the generated_at comment
/// line, which parsers skip.
class Manifest {
 public:
  void set(std::string key, std::string value) {
    if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos) {
      throw ConfigError("manifest: bad key '" + key + "'");
    }
    if (value.find('\n') != std::string::npos) {
      throw ConfigError("manifest: value for '" + key + "' contains a newline");
    }
    auto it = index_.find(key);
    if (it != index_.end()) {
      entries_[it->second].second = std::move(value);
      return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void set_i64(const std::string& key, int64_t v) { set(key, format_i64(v)); }
  void set_u64(const std::string& key, uint64_t v) { set(key, std::to_string(v)); }
  void set_double(const std::string& key, double v) { set(key, format_double(v)); }
  void set_bool(const std::string& key, bool v) { set(key, v ? "true" : "false"); }

  bool contains(const std::string& key) const { return index_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ParseError("manifest: missing key '" + key + "'");
    return entries_[it->second].second;
  }
  int64_t get_i64(const std::string& key) const { return parse_i64(get(key), key); }
  uint64_t get_u64(const std::string& key) const { return parse_u64(get(key), key); }
  double get_double(const std::string& key) const { return parse_double(get(key), key); }
  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError("manifest: key '" + key + "' is not a boolean");
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_text() const {
    std::string out = kManifestMagic;
    out += '\n';
    out += "# generated_at = " + iso_utc_now() + "\n";
    for (const auto& [k, v] : entries_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

  void write_file(const std::filesystem::path& path) const {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
      std::ofstream os(tmp, std::ios::trunc);
      if (!os) throw IoError("manifest: cannot open '" + tmp.string() + "' for writing");
      os << to_text();
      if (!os) throw IoError("manifest: write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

  static Manifest from_text(const std::string& text) {
    Manifest m;
    bool first = true;
    int line_no = 0;
    for (auto line : split(text, '\n')) {
      ++line_no;
      line = trim(line);
      if (first) {
        if (line != kManifestMagic) {
          throw ParseError("manifest: first line must be '" + std::string(kManifestMagic) + "'");
        }
        first = false;
        continue;
      }
      if (line.empty() || line.front() == '#') continue;
      const size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("manifest line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      const std::string key{trim(line.substr(0, eq))};
      if (m.contains(key)) {
        throw ParseError("manifest line " + std::to_string(line_no) + ": duplicate key '" + key +
                         "'");
      }
      m.set(key, std::string(trim(line.substr(eq + 1))));
    }
    if (first) throw ParseError("manifest: empty file");
    return m;
  }

  static Manifest from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_text(text);
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace coilsense
