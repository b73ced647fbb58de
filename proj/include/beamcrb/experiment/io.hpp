#pragma once

// CSV tables and complex matrices (re/im column pairs) plus the JSON
// metadata sidecar written next to every table.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamcrb/core.hpp"

namespace beamcrb::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

/// 64-bit FNV-1a digest as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Shortest round-trip decimal form; infinities print as inf / -inf.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shorter %.15g form when it round-trips.
  char shorter[32];
  std::snprintf(shorter, sizeof shorter, "%.15g", v);
  return std::strtod(shorter, nullptr) == v ? shorter : buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::nan("");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw IoError("row width does not match the header");
    rows_.push_back(std::move(row));
  }

  void add(const std::vector<double>& row) {
    std::vector<std::string> r;
    for (double v : row) r.push_back(fmt(v));
    add(std::move(r));
  }

  std::string str() const {
    std::ostringstream os;
    const auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline Table matrix_table(const CMat& M) {
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    h.push_back("c" + std::to_string(j) + "_re");
    h.push_back("c" + std::to_string(j) + "_im");
  }
  Table t(h);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<double> r;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      r.push_back(M(i, j).real());
      r.push_back(M(i, j).imag());
    }
    t.add(r);
  }
  return t;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) {
    while (!cur.empty() && std::isspace(static_cast<unsigned char>(cur.back()))) cur.pop_back();
    std::size_t b = 0;
    while (b < cur.size() && std::isspace(static_cast<unsigned char>(cur[b]))) ++b;
    out.push_back(cur.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a complex matrix written by matrix_table (header row required).
inline CMat read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.empty() || header.size() % 2 != 0)
    throw IoError(path.string() + ": header must hold re/im column pairs");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError(path.string() + ": row " + std::to_string(rows.size() + 1) +
                    " has the wrong number of columns");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(parse_double(c));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw IoError(path.string() + " has no data rows");
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(header.size() / 2);
  CMat M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = cd(rows[i][2 * j], rows[i][2 * j + 1]);
  return M;
}

/// Text file contents staged in memory so that a command writes nothing
/// unless it succeeds as a whole.
struct Artifact {
  std::string name;
  std::string content;
};

inline void write_artifacts(const fs::path& dir, const std::vector<Artifact>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& f : files) {
    const fs::path p = dir / f.name;
    const fs::path tmp = dir / (f.name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << f.content;
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, p, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

/// Adds `name` and its metadata sidecar `name.meta.json`.
inline void stage_table(std::vector<Artifact>& out, const std::string& name, const Table& t,
                        const json& meta) {
  out.push_back({name, t.str()});
  json m = meta;
  m["file"] = name;
  m["columns"] = t.header();
  out.push_back({name + ".meta.json", m.dump(2) + "\n"});
}

}  // namespace beamcrb::io
