#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardylab/errors.hpp"

namespace cardylab {

inline constexpr const char* kVersion = "0.1.0";

// All numeric output uses 12 significant decimal digits.
inline std::string fmt12(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Tabular experiment output plus nested metadata.  Every file embeds the
// config hash, the seed, and the artifact version.
struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json meta;  // config echo, audits, witnesses, timings
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  void add_row(std::vector<double> r) {
    if (r.size() != columns.size())
      throw error("REPORT_SHAPE", "row width does not match columns");
    rows.push_back(std::move(r));
  }

  std::string csv() const {
    std::string out = "# config_hash=" + std::to_string(config_hash) +
                      " seed=" + std::to_string(seed) + " version=" + kVersion +
                      "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i)
        out += (i ? "," : "") + fmt12(r[i]);
      out += "\n";
    }
    return out;
  }

  nlohmann::json json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["version"] = kVersion;
    j["columns"] = columns;
    auto& jr = j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row = nlohmann::json::array();
      for (const double x : r) row.push_back(fmt12(x));
      jr.push_back(row);
    }
    j["meta"] = meta;
    return j;
  }

  // x = log(eps), y = |C_eps - C0|, then the confidence interval; columns
  // are looked up by name so any experiment with these fields can plot.
  std::string plotdata() const {
    const auto col = [&](const std::string& name) {
      for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
      throw error("REPORT_SHAPE", "plotdata needs column " + name);
    };
    const int ce = col("log_eps"), ca = col("abs_err"), cl = col("ci_lo"),
              ch = col("ci_hi");
    std::string out = "# config_hash=" + std::to_string(config_hash) +
                      " seed=" + std::to_string(seed) + " version=" + kVersion +
                      "\nlog_eps abs_err ci_lo ci_hi\n";
    for (const auto& r : rows)
      out += fmt12(r[ce]) + " " + fmt12(r[ca]) + " " + fmt12(r[cl]) + " " +
             fmt12(r[ch]) + "\n";
    return out;
  }

  void write(const std::string& dir, const std::string& stem,
             const std::string& format) const {
    const std::string path = dir + "/" + stem + "." +
                             (format == "plotdata" ? "dat" : format);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("IO", "cannot write " + path);
    if (format == "csv")
      f << csv();
    else if (format == "json")
      f << json().dump(2) << "\n";
    else if (format == "plotdata")
      f << plotdata();
    else
      throw error("CONFIG", "unknown format " + format);
  }
};

}  // namespace cardylab
