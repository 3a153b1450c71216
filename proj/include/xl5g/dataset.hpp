#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xl5g/geo.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

// GSM/UMTS/TETRA appear in dataset rows; WLAN exists only as a vRRU radio
// personality and is never produced by the parser.
enum class Protocol { GSM, UMTS, TETRA, WLAN };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::GSM: return "GSM";
    case Protocol::UMTS: return "UMTS";
    case Protocol::TETRA: return "TETRA";
    case Protocol::WLAN: return "WLAN";
  }
  return "?";
}

inline std::optional<Protocol> parse_protocol(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "GSM") return Protocol::GSM;
  if (s == "UMTS") return Protocol::UMTS;
  if (s == "TETRA") return Protocol::TETRA;
  return std::nullopt;
}

struct BaseStationRecord {
  int id = 0;
  std::string operator_name;
  Protocol protocol = Protocol::GSM;
  PlanarPoint location;  // set by project_records()
  std::optional<double> tx_power_dbm;
  GeoPoint raw_geo;
};

// Column names of a Sitefinder-style export. Empty id_col means ids are
// assigned by row order.
struct SitefinderSchema {
  std::string operator_col = "operator";
  std::string protocol_col = "protocol";
  std::string latitude_col = "latitude";
  std::string longitude_col = "longitude";
  std::string power_col = "power";
  std::string id_col = "id";
};

struct ParseReport {
  int kept = 0;
  int skipped = 0;
  std::vector<std::pair<int, std::string>> skip_reasons;  // (1-based data row, reason)
};

namespace detail {

// Minimal CSV field split with double-quote support.
inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Parses one record per well-formed row, preserving file order. Malformed
// rows are skipped and counted, never fatal; a missing header is fatal.
inline std::pair<std::vector<BaseStationRecord>, ParseReport> parse_sitefinder(
    std::istream& in, const SitefinderSchema& schema = {}) {
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw io_error("dataset has no header row");
  }
  const auto header = detail::split_csv_row(header_line);
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    col[detail::trim(header[i])] = static_cast<int>(i);
  }
  auto require = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw io_error("dataset header lacks column '" + name + "'");
    return it->second;
  };
  const int c_op = require(schema.operator_col);
  const int c_proto = require(schema.protocol_col);
  const int c_lat = require(schema.latitude_col);
  const int c_lon = require(schema.longitude_col);
  const int c_pow = col.count(schema.power_col) ? col[schema.power_col] : -1;
  const int c_id = (!schema.id_col.empty() && col.count(schema.id_col)) ? col[schema.id_col] : -1;

  std::vector<BaseStationRecord> records;
  ParseReport report;
  std::vector<bool> seen_ids;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_row(line);
    auto field = [&](int idx) -> std::optional<std::string> {
      if (idx < 0 || idx >= static_cast<int>(fields.size())) return std::nullopt;
      return detail::trim(fields[idx]);
    };
    auto skip = [&](const std::string& why) {
      ++report.skipped;
      report.skip_reasons.emplace_back(row, why);
    };

    const auto op = field(c_op);
    if (!op || op->empty()) { skip("missing operator"); continue; }
    const auto proto_s = field(c_proto);
    const auto proto = proto_s ? parse_protocol(*proto_s) : std::nullopt;
    if (!proto) { skip("unknown protocol"); continue; }
    const auto lat = detail::parse_double(field(c_lat).value_or(""));
    const auto lon = detail::parse_double(field(c_lon).value_or(""));
    if (!lat || !lon) { skip("unparseable coordinates"); continue; }
    const GeoPoint geo{*lat, *lon};
    if (!geo.valid()) { skip("coordinates out of range"); continue; }

    BaseStationRecord rec;
    if (c_id >= 0) {
      const auto id = detail::parse_double(field(c_id).value_or(""));
      if (!id || *id != std::floor(*id) || *id < 0) { skip("bad id"); continue; }
      rec.id = static_cast<int>(*id);
    } else {
      rec.id = report.kept + 1;  // 1-based, like the report's row numbers
    }
    if (rec.id < static_cast<int>(seen_ids.size()) && seen_ids[rec.id]) {
      skip("duplicate id");
      continue;
    }
    if (rec.id >= static_cast<int>(seen_ids.size())) seen_ids.resize(rec.id + 1, false);
    seen_ids[rec.id] = true;
    rec.operator_name = *op;
    rec.protocol = *proto;
    rec.raw_geo = geo;
    if (c_pow >= 0) rec.tx_power_dbm = detail::parse_double(field(c_pow).value_or(""));
    records.push_back(std::move(rec));
    ++report.kept;
  }
  return {std::move(records), std::move(report)};
}

inline std::pair<std::vector<BaseStationRecord>, ParseReport> parse_sitefinder(
    const std::string& text, const SitefinderSchema& schema = {}) {
  std::istringstream in(text);
  return parse_sitefinder(in, schema);
}

// Sets every record's planar location from its raw geography.
inline std::vector<BaseStationRecord> project_records(std::vector<BaseStationRecord> records,
                                                      const GeoPoint& origin) {
  for (auto& r : records) r.location = project(r.raw_geo, origin);
  return records;
}

// Keeps exactly the records inside the region's half-open bounds, order
// preserved. Records must already be projected against region.origin.
inline std::vector<BaseStationRecord> clip_region(const std::vector<BaseStationRecord>& records,
                                                  const Region& region) {
  std::vector<BaseStationRecord> out;
  for (const auto& r : records) {
    if (region.contains(r.location)) out.push_back(r);
  }
  return out;
}

struct CoverageGrid {
  double spacing_m = 0.0;
  std::vector<PlanarPoint> points;
  std::vector<std::vector<int>> cover_sets;  // per point: sorted station ids within radius
};

// Lattice points at (i*spacing, j*spacing) inside the half-open region,
// x-major order. cover_sets[p] holds the ids of stations within radius.
inline CoverageGrid build_grid(const Region& region, double spacing_m,
                               const std::vector<BaseStationRecord>& stations,
                               double radius_m) {
  if (spacing_m <= 0.0) throw config_error("grid spacing must be positive");
  if (radius_m < 0.0) throw config_error("coverage radius must be non-negative");
  CoverageGrid grid;
  grid.spacing_m = spacing_m;
  for (int i = 0; i * spacing_m < region.width_m; ++i) {
    for (int j = 0; j * spacing_m < region.height_m; ++j) {
      grid.points.push_back(PlanarPoint{i * spacing_m, j * spacing_m});
    }
  }
  const double r2 = radius_m * radius_m;
  grid.cover_sets.resize(grid.points.size());
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    for (const auto& s : stations) {
      if (distance_sq(grid.points[p], s.location) <= r2) {
        grid.cover_sets[p].push_back(s.id);
      }
    }
    std::sort(grid.cover_sets[p].begin(), grid.cover_sets[p].end());
  }
  return grid;
}

}  // namespace xl5g
