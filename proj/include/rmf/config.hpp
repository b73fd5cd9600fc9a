#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmf/common.hpp"

namespace rmf {

// Floating-point values are printed with 17 significant digits so that
// every emitted number round-trips exactly.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Key-value run configuration. The canonical text (sorted key=value lines)
// feeds the FNV-1a config hash embedded in every output. Execution-only
// keys (worker count, output paths) are excluded from the hash so that
// reruns with different parallel width reproduce files byte-for-byte.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  void set(const std::string& key, double value) { kv_[key] = fmt_g17(value); }
  void set(const std::string& key, u64 value) { kv_[key] = std::to_string(value); }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::invalid_argument("config: missing key '" + key + "'");
    return it->second;
  }

  // Parse `key = value` lines; '#' starts a comment; blank lines ignored.
  static std::map<std::string, std::string> parse_file(
      const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("config: cannot open " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (eq == std::string::npos)
        throw format_error("config: line " + std::to_string(lineno) +
                           " is not 'key = value'");
      out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
  }

  std::string canonical_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
  }

  u64 hash() const { return fnv1a64(canonical_text()); }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  std::map<std::string, std::string> kv_;  // sorted, hence canonical
};

inline std::string hash_hex(u64 h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// CSV with a leading `# config_hash=<hex>` comment line and a header row.
class CsvWriter {
 public:
  CsvWriter(u64 config_hash, std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    os_ << "# config_hash=" << hash_hex(config_hash) << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
      os_ << (i ? "," : "") << columns_[i];
    os_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw std::invalid_argument("csv: cell count does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i)
      os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }

  std::string str() const { return os_.str(); }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("csv: cannot open " + path.string());
    f << str();
    if (!f) throw io_error("csv: write failed for " + path.string());
  }

 private:
  std::vector<std::string> columns_;
  std::ostringstream os_;
};

}  // namespace rmf
