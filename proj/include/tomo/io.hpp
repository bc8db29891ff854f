#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tomo/common.hpp"

namespace tomo {

// All writers below produce byte-identical output for identical inputs:
// fixed decimal formatting, '\n' separators, no timestamps.

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Row-major float64 binary dump.
inline void write_f64_matrix(const std::filesystem::path& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline std::vector<double> read_f64_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ConfigError("cannot open for reading: " + path.string());
  std::streamsize bytes = in.tellg();
  if (bytes % static_cast<std::streamsize>(sizeof(double)) != 0)
    throw ConfigError("binary matrix has a non-float64 size: " + path.string());
  in.seekg(0);
  std::vector<double> data(static_cast<std::size_t>(bytes) / sizeof(double));
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  if (!in) throw ConfigError("read failed: " + path.string());
  return data;
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  std::string bytes = read_text_file(path);
  return fnv1a(bytes.data(), bytes.size());
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string header) { buf_ += header + "\n"; }

  CsvWriter& cell(double v) {
    sep();
    buf_ += fmt_g17(v);
    return *this;
  }
  CsvWriter& cell(int v) { return cell_raw(std::to_string(v)); }
  CsvWriter& cell(std::size_t v) { return cell_raw(std::to_string(v)); }
  CsvWriter& cell(const std::string& v) { return cell_raw(v); }

  void end_row() {
    buf_ += "\n";
    row_open_ = false;
  }

  const std::string& str() const { return buf_; }
  void save(const std::filesystem::path& path) const { write_text_file(path, buf_); }

 private:
  CsvWriter& cell_raw(const std::string& v) {
    sep();
    buf_ += v;
    return *this;
  }
  void sep() {
    if (row_open_) buf_ += ",";
    row_open_ = true;
  }
  std::string buf_;
  bool row_open_ = false;
};

}  // namespace tomo
