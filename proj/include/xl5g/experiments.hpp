#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xl5g/dataset.hpp"
#include "xl5g/geo.hpp"
#include "xl5g/serialize.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

enum class EnergyStrategy { IIT, CIT };

inline const char* to_string(EnergyStrategy s) {
  return s == EnergyStrategy::IIT ? "IIT" : "CIT";
}

inline std::optional<EnergyStrategy> parse_energy_strategy(const std::string& s) {
  if (s == "IIT") return EnergyStrategy::IIT;
  if (s == "CIT") return EnergyStrategy::CIT;
  return std::nullopt;
}

enum class QosStrategy { Current, IntraOPR, InterOPR, HeterSTRA };

inline const char* to_string(QosStrategy s) {
  switch (s) {
    case QosStrategy::Current: return "Current";
    case QosStrategy::IntraOPR: return "IntraOPR";
    case QosStrategy::InterOPR: return "InterOPR";
    case QosStrategy::HeterSTRA: return "HeterSTRA";
  }
  return "?";
}

inline std::optional<QosStrategy> parse_qos_strategy(const std::string& s) {
  if (s == "Current") return QosStrategy::Current;
  if (s == "IntraOPR") return QosStrategy::IntraOPR;
  if (s == "InterOPR") return QosStrategy::InterOPR;
  if (s == "HeterSTRA") return QosStrategy::HeterSTRA;
  return std::nullopt;
}

inline void check_radii(const std::vector<double>& radii) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 0.0) throw config_error("radii must be positive");
    if (i > 0 && radii[i] <= radii[i - 1]) throw config_error("radii must be strictly increasing");
  }
}

inline std::vector<double> default_radius_sweep() {
  std::vector<double> radii;
  for (double r = 200.0; r <= 2000.0; r += 200.0) radii.push_back(r);
  return radii;
}

// ---- coverage / energy ----

// Greedy maximum coverage: repeatedly pick the station covering the most
// uncovered demand points, ties to the lowest station id, until every demand
// point is covered. Demand must be coverable by the input set.
inline std::set<int> greedy_cover(const std::vector<BaseStationRecord>& stations,
                                  const std::vector<PlanarPoint>& demand, double radius_m) {
  std::vector<const BaseStationRecord*> by_id;
  by_id.reserve(stations.size());
  for (const auto& s : stations) by_id.push_back(&s);
  std::sort(by_id.begin(), by_id.end(),
            [](const BaseStationRecord* a, const BaseStationRecord* b) { return a->id < b->id; });

  const std::size_t words = (demand.size() + 63) / 64;
  const double r2 = radius_m * radius_m;
  std::vector<std::vector<std::uint64_t>> covers(by_id.size(),
                                                 std::vector<std::uint64_t>(words, 0));
  std::vector<std::uint64_t> uncovered(words, 0);
  for (std::size_t p = 0; p < demand.size(); ++p) {
    uncovered[p / 64] |= std::uint64_t{1} << (p % 64);
    for (std::size_t s = 0; s < by_id.size(); ++s) {
      if (distance_sq(demand[p], by_id[s]->location) <= r2) {
        covers[s][p / 64] |= std::uint64_t{1} << (p % 64);
      }
    }
  }

  auto popcount_and = [&](const std::vector<std::uint64_t>& a,
                          const std::vector<std::uint64_t>& b) {
    int n = 0;
    for (std::size_t w = 0; w < words; ++w) n += std::popcount(a[w] & b[w]);
    return n;
  };
  auto any_set = [&](const std::vector<std::uint64_t>& v) {
    for (std::size_t w = 0; w < words; ++w) {
      if (v[w]) return true;
    }
    return false;
  };

  std::set<int> active;
  while (any_set(uncovered)) {
    int best = -1;
    int best_gain = 0;
    for (std::size_t s = 0; s < by_id.size(); ++s) {
      const int gain = popcount_and(covers[s], uncovered);
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(s);
      }
    }
    if (best < 0) throw model_error("demand contains a point no station covers");
    active.insert(by_id[best]->id);
    for (std::size_t w = 0; w < words; ++w) uncovered[w] &= ~covers[best][w];
  }
  return active;
}

struct EnergyConfig {
  Protocol protocol = Protocol::UMTS;
  EnergyStrategy strategy = EnergyStrategy::IIT;
  std::vector<double> radii_m = default_radius_sweep();
  double grid_spacing_m = 100.0;
  std::uint64_t seed = 42;
  Region region = manchester_region();
};

struct EnergyRow {
  Protocol protocol = Protocol::UMTS;
  EnergyStrategy strategy = EnergyStrategy::IIT;
  double radius_m = 0.0;
  std::string operator_name;  // "ALL" for pooled / total rows
  int total = 0;
  int active = 0;
  double off_fraction = 0.0;
  double energy_ratio = 0.0;
};

struct EnergyResult {
  std::vector<EnergyRow> rows;
};

namespace detail {

// Linear power in milliwatts; the ratio is scale-free so no reference
// impedance is needed.
inline double power_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

// Demand at a sweep point: the grid points covered by at least one of the
// given stations at this radius.
inline std::vector<PlanarPoint> coverable_points(const std::vector<BaseStationRecord>& stations,
                                                 const Region& region, double spacing_m,
                                                 double radius_m) {
  const CoverageGrid grid = build_grid(region, spacing_m, stations, radius_m);
  std::vector<PlanarPoint> demand;
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    if (!grid.cover_sets[p].empty()) demand.push_back(grid.points[p]);
  }
  return demand;
}

}  // namespace detail

// One (protocol, strategy) sweep. IIT solves an independent cover per
// operator over that operator's own demand; CIT pools every operator's
// stations against the union demand. Shutdown choices are emitted to the
// event log as controller deactivation commands.
inline EnergyResult run_energy(const EnergyConfig& config,
                               const std::vector<BaseStationRecord>& all_stations,
                               EventLog* log = nullptr) {
  check_radii(config.radii_m);
  if (config.grid_spacing_m <= 0.0) throw config_error("grid spacing must be positive");
  std::vector<BaseStationRecord> stations;
  for (const auto& s : all_stations) {
    if (s.protocol == config.protocol) stations.push_back(s);
  }
  if (stations.empty()) {
    throw model_error(std::string("no stations with protocol ") + to_string(config.protocol));
  }
  const bool uniform_power =
      std::any_of(stations.begin(), stations.end(),
                  [](const BaseStationRecord& s) { return !s.tx_power_dbm.has_value(); });
  auto weight = [&](const BaseStationRecord& s) {
    return uniform_power ? 1.0 : detail::power_mw(*s.tx_power_dbm);
  };

  std::map<std::string, std::vector<BaseStationRecord>> by_operator;
  for (const auto& s : stations) by_operator[s.operator_name].push_back(s);

  auto deactivate_events = [&](const std::vector<BaseStationRecord>& group,
                               const std::set<int>& active, double radius) {
    if (log == nullptr) return;
    std::vector<const BaseStationRecord*> off;
    for (const auto& s : group) {
      if (!active.count(s.id)) off.push_back(&s);
    }
    std::sort(off.begin(), off.end(),
              [](const BaseStationRecord* a, const BaseStationRecord* b) { return a->id < b->id; });
    for (const auto* s : off) {
      json j = json::object();
      j["event"] = "deactivate";
      j["protocol"] = to_string(config.protocol);
      j["strategy"] = to_string(config.strategy);
      j["radius_m"] = radius;
      j["operator"] = s->operator_name;
      j["station"] = s->id;
      log->append(j);
    }
  };

  EnergyResult result;
  for (const double radius : config.radii_m) {
    if (config.strategy == EnergyStrategy::IIT) {
      int total_all = 0;
      int active_all = 0;
      double power_active = 0.0;
      double power_total = 0.0;
      std::vector<EnergyRow> op_rows;
      for (const auto& [op, group] : by_operator) {
        const auto demand =
            detail::coverable_points(group, config.region, config.grid_spacing_m, radius);
        const std::set<int> active = greedy_cover(group, demand, radius);
        double p_active = 0.0;
        double p_total = 0.0;
        for (const auto& s : group) {
          p_total += weight(s);
          if (active.count(s.id)) p_active += weight(s);
        }
        op_rows.push_back(EnergyRow{config.protocol, config.strategy, radius, op,
                                    static_cast<int>(group.size()),
                                    static_cast<int>(active.size()),
                                    1.0 - static_cast<double>(active.size()) / group.size(),
                                    p_active / p_total});
        total_all += static_cast<int>(group.size());
        active_all += static_cast<int>(active.size());
        power_active += p_active;
        power_total += p_total;
        deactivate_events(group, active, radius);
      }
      result.rows.push_back(EnergyRow{config.protocol, config.strategy, radius, "ALL", total_all,
                                      active_all,
                                      1.0 - static_cast<double>(active_all) / total_all,
                                      power_active / power_total});
      for (auto& row : op_rows) result.rows.push_back(std::move(row));
    } else {
      const auto demand =
          detail::coverable_points(stations, config.region, config.grid_spacing_m, radius);
      const std::set<int> active = greedy_cover(stations, demand, radius);
      double p_active = 0.0;
      double p_total = 0.0;
      for (const auto& s : stations) {
        p_total += weight(s);
        if (active.count(s.id)) p_active += weight(s);
      }
      result.rows.push_back(EnergyRow{config.protocol, config.strategy, radius, "ALL",
                                      static_cast<int>(stations.size()),
                                      static_cast<int>(active.size()),
                                      1.0 - static_cast<double>(active.size()) / stations.size(),
                                      p_active / p_total});
      deactivate_events(stations, active, radius);
    }
  }
  return result;
}

// ---- QoS ----

struct QosConfig {
  int n_users = 10000;
  std::vector<double> radii_m = default_radius_sweep();
  std::vector<QosStrategy> strategies = {QosStrategy::Current, QosStrategy::IntraOPR,
                                         QosStrategy::InterOPR, QosStrategy::HeterSTRA};
  Protocol protocol_for_1to3 = Protocol::UMTS;
  std::uint64_t seed = 42;
  Region region = manchester_region();
};

// Keyed-hash uniform sampler: the utility of a (user, station) pair is fixed
// by the seed and identical across strategies, which is what makes the
// strategy dominance chain hold per user.
struct UtilitySampler {
  std::uint64_t seed = 42;

  double sample(int user_id, int bs_id) const {
    return to_unit(mix64(seed, static_cast<std::uint64_t>(user_id),
                         static_cast<std::uint64_t>(bs_id)));
  }
};

struct UserPlacement {
  int user_id = 0;
  PlanarPoint location;
  std::string assigned_operator;
  Protocol assigned_protocol = Protocol::UMTS;
};

namespace detail {
inline constexpr std::uint64_t kUserXStream = 0x75F0;
inline constexpr std::uint64_t kUserYStream = 0x75F1;
inline constexpr std::uint64_t kUserNetStream = 0x75F2;
}  // namespace detail

// Users land uniformly in the region; each is bound to one operator chosen
// uniformly among the operators that field stations of the assigned protocol.
inline std::vector<UserPlacement> place_users(const QosConfig& config, const Region& region,
                                              const std::vector<BaseStationRecord>& stations) {
  std::vector<std::string> operators;
  for (const auto& s : stations) {
    if (s.protocol == config.protocol_for_1to3) operators.push_back(s.operator_name);
  }
  std::sort(operators.begin(), operators.end());
  operators.erase(std::unique(operators.begin(), operators.end()), operators.end());
  if (operators.empty() && config.n_users > 0) {
    throw model_error(std::string("no operators with protocol ") +
                      to_string(config.protocol_for_1to3));
  }
  std::vector<UserPlacement> users;
  users.reserve(config.n_users);
  for (int u = 0; u < config.n_users; ++u) {
    UserPlacement up;
    up.user_id = u;
    up.location.x_m = to_unit(mix64(config.seed, detail::kUserXStream, u)) * region.width_m;
    up.location.y_m = to_unit(mix64(config.seed, detail::kUserYStream, u)) * region.height_m;
    up.assigned_operator =
        operators[mix64(config.seed, detail::kUserNetStream, u) % operators.size()];
    up.assigned_protocol = config.protocol_for_1to3;
    users.push_back(std::move(up));
  }
  return users;
}

struct StrategyOutcome {
  double utility = 0.0;
  bool covered = false;
  int station_id = -1;
};

// Feasible set per strategy: Current and IntraOPR restrict to the assigned
// (operator, protocol); InterOPR frees the operator; HeterSTRA frees the
// standard too (GSM and UMTS pooled). Current attaches to the nearest
// in-range station, the optimizing strategies to the best-utility one.
inline StrategyOutcome evaluate_strategy_detail(const UserPlacement& user, QosStrategy strategy,
                                                double radius_m,
                                                const std::vector<BaseStationRecord>& stations,
                                                const UtilitySampler& sampler) {
  const double r2 = radius_m * radius_m;
  StrategyOutcome out;
  double nearest_d2 = 0.0;
  for (const auto& s : stations) {
    bool feasible = false;
    switch (strategy) {
      case QosStrategy::Current:
      case QosStrategy::IntraOPR:
        feasible = s.protocol == user.assigned_protocol &&
                   s.operator_name == user.assigned_operator;
        break;
      case QosStrategy::InterOPR:
        feasible = s.protocol == user.assigned_protocol;
        break;
      case QosStrategy::HeterSTRA:
        feasible = s.protocol == Protocol::GSM || s.protocol == Protocol::UMTS;
        break;
    }
    if (!feasible) continue;
    const double d2 = distance_sq(user.location, s.location);
    if (d2 > r2) continue;
    if (strategy == QosStrategy::Current) {
      if (!out.covered || d2 < nearest_d2 || (d2 == nearest_d2 && s.id < out.station_id)) {
        out.covered = true;
        nearest_d2 = d2;
        out.station_id = s.id;
        out.utility = sampler.sample(user.user_id, s.id);
      }
    } else {
      const double u = sampler.sample(user.user_id, s.id);
      if (!out.covered || u > out.utility || (u == out.utility && s.id < out.station_id)) {
        out.covered = true;
        out.utility = u;
        out.station_id = s.id;
      }
    }
  }
  return out;
}

inline double evaluate_strategy(const UserPlacement& user, QosStrategy strategy, double radius_m,
                                const std::vector<BaseStationRecord>& stations,
                                const UtilitySampler& sampler) {
  return evaluate_strategy_detail(user, strategy, radius_m, stations, sampler).utility;
}

struct QosRow {
  double radius_m = 0.0;
  QosStrategy strategy = QosStrategy::Current;
  double mean_utility = 0.0;
  double zero_coverage_fraction = 0.0;
  int n_users = 0;
};

struct QosResult {
  std::vector<QosRow> rows;
};

// Access choices of the optimizing strategies are controller decisions, so
// they go to the event log as forward assignments.
inline QosResult run_qos(const QosConfig& config, const std::vector<BaseStationRecord>& stations,
                         EventLog* log = nullptr) {
  check_radii(config.radii_m);
  const std::vector<UserPlacement> users = place_users(config, config.region, stations);
  const UtilitySampler sampler{config.seed};
  QosResult result;
  for (const double radius : config.radii_m) {
    for (const QosStrategy strategy : config.strategies) {
      double sum = 0.0;
      int uncovered = 0;
      for (const auto& user : users) {
        const StrategyOutcome out =
            evaluate_strategy_detail(user, strategy, radius, stations, sampler);
        sum += out.utility;
        if (!out.covered) ++uncovered;
        if (log != nullptr && out.covered && strategy != QosStrategy::Current) {
          json j = json::object();
          j["event"] = "assign";
          j["radius_m"] = radius;
          j["strategy"] = to_string(strategy);
          j["user"] = user.user_id;
          j["station"] = out.station_id;
          j["service_tag"] = user.user_id & 0xFFFF;
          log->append(j);
        }
      }
      QosRow row;
      row.radius_m = radius;
      row.strategy = strategy;
      row.mean_utility = users.empty() ? 0.0 : sum / static_cast<double>(users.size());
      row.zero_coverage_fraction =
          users.empty() ? 0.0 : static_cast<double>(uncovered) / users.size();
      row.n_users = static_cast<int>(users.size());
      result.rows.push_back(row);
    }
  }
  return result;
}

// ---- result files ----

// Rows sort by (protocol, radius, strategy, operator) and floats print at
// fixed precision, so equal runs produce byte-identical files.
inline void write_energy_csv(std::vector<EnergyRow> rows, const std::string& path,
                             std::uint64_t seed) {
  std::sort(rows.begin(), rows.end(), [](const EnergyRow& a, const EnergyRow& b) {
    const std::string pa = to_string(a.protocol);
    const std::string pb = to_string(b.protocol);
    if (pa != pb) return pa < pb;
    if (a.radius_m != b.radius_m) return a.radius_m < b.radius_m;
    const std::string sa = to_string(a.strategy);
    const std::string sb = to_string(b.strategy);
    if (sa != sb) return sa < sb;
    return a.operator_name < b.operator_name;
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << "# seed=" << seed << "\n";
  out << "protocol,strategy,radius_m,operator,total,active,off_fraction,energy_ratio\n";
  for (const auto& r : rows) {
    out << to_string(r.protocol) << ',' << to_string(r.strategy) << ','
        << format_fixed(r.radius_m, 1) << ',' << r.operator_name << ',' << r.total << ','
        << r.active << ',' << format_fixed(r.off_fraction, 6) << ','
        << format_fixed(r.energy_ratio, 6) << "\n";
  }
}

inline void write_qos_csv(std::vector<QosRow> rows, const std::string& path, std::uint64_t seed) {
  std::sort(rows.begin(), rows.end(), [](const QosRow& a, const QosRow& b) {
    if (a.radius_m != b.radius_m) return a.radius_m < b.radius_m;
    return std::string(to_string(a.strategy)) < to_string(b.strategy);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << "# seed=" << seed << "\n";
  out << "radius_m,strategy,mean_utility,zero_coverage_fraction,n_users\n";
  for (const auto& r : rows) {
    out << format_fixed(r.radius_m, 1) << ',' << to_string(r.strategy) << ','
        << format_fixed(r.mean_utility, 6) << ',' << format_fixed(r.zero_coverage_fraction, 6)
        << ',' << r.n_users << "\n";
  }
}

}  // namespace xl5g
