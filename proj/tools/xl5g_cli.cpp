// Command-line front end. Subcommands: ingest, energy, qos, simulate,
// validate. All outputs are plain files; stdout carries only data summaries
// and stderr carries diagnostics, so the tool composes in scripts.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "xl5g/dataset.hpp"
#include "xl5g/scenario.hpp"

namespace fs = std::filesystem;
using namespace xl5g;

namespace {

int log_level() {
  const char* env = std::getenv("XL5G_LOG");
  if (env == nullptr) return 1;
  const std::string v = env;
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << "\n";
}

void debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << msg << "\n";
}

struct CommonOpts {
  std::string dataset_path;
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 42;
  bool seed_given = false;
  int jobs = 1;
  std::string radius_list;
  double grid_spacing = 0.0;  // 0 means "use scenario value"
};

// Scenario plus the flag overrides layered on top of it.
Scenario effective_scenario(const CommonOpts& opts) {
  Scenario sc;
  if (!opts.scenario_path.empty()) sc = load_scenario(opts.scenario_path);
  if (opts.seed_given) sc.seed = opts.seed;
  if (!opts.radius_list.empty()) {
    std::vector<double> radii;
    std::stringstream ss(opts.radius_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        const double r = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        radii.push_back(r);
      } catch (const std::exception&) {
        throw config_error("bad radius '" + tok + "' in --radius-list");
      }
    }
    check_radii(radii);
    sc.radii_m = std::move(radii);
  }
  if (opts.grid_spacing > 0.0) sc.grid_spacing_m = opts.grid_spacing;
  return sc;
}

std::vector<BaseStationRecord> load_stations(const std::string& path, const Region& region,
                                             ParseReport* report_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read dataset '" + path + "'");
  auto [records, report] = parse_sitefinder(in);
  if (report_out != nullptr) *report_out = report;
  debug("parsed " + std::to_string(report.kept) + " rows, skipped " +
        std::to_string(report.skipped));
  return clip_region(project_records(std::move(records), region.origin), region);
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory '" + out_dir + "': " + ec.message());
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  for (const auto& line : lines) out << line << "\n";
}

// Runs tasks 0..n-1 on a pool; results land in task-index slots so output
// assembly does not depend on the worker count.
template <typename Fn>
void run_pool(std::size_t n_tasks, int jobs, Fn&& fn) {
  if (jobs < 1) throw config_error("--jobs must be at least 1");
  const int workers = static_cast<int>(std::min<std::size_t>(n_tasks, jobs));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

int cmd_ingest(const CommonOpts& opts) {
  const Scenario sc = effective_scenario(opts);
  ensure_out_dir(opts.out_dir);
  ParseReport report;
  const auto stations = load_stations(opts.dataset_path, sc.region, &report);

  std::vector<std::string> lines;
  lines.push_back("# seed=" + std::to_string(sc.seed));
  lines.push_back("id,operator,protocol,latitude,longitude,power,x_m,y_m");
  for (const auto& s : stations) {
    std::string power = s.tx_power_dbm ? format_fixed(*s.tx_power_dbm, 1) : "";
    lines.push_back(std::to_string(s.id) + "," + s.operator_name + "," +
                    std::string(to_string(s.protocol)) + "," +
                    format_fixed(s.raw_geo.latitude_deg, 6) + "," +
                    format_fixed(s.raw_geo.longitude_deg, 6) + "," + power + "," +
                    format_fixed(s.location.x_m, 2) + "," + format_fixed(s.location.y_m, 2));
  }
  const std::string out_path = (fs::path(opts.out_dir) / "ingest.csv").string();
  write_lines(out_path, lines);

  std::map<std::pair<std::string, std::string>, int> by_operator;
  std::map<std::string, int> by_protocol;
  for (const auto& s : stations) {
    ++by_operator[{s.operator_name, to_string(s.protocol)}];
    ++by_protocol[to_string(s.protocol)];
  }
  std::cout << "operator,protocol,count\n";
  for (const auto& [key, count] : by_operator) {
    std::cout << key.first << "," << key.second << "," << count << "\n";
  }
  for (const auto& [proto, count] : by_protocol) {
    std::cout << "ALL," << proto << "," << count << "\n";
  }
  if (stations.empty()) {
    std::cerr << "warning: no stations inside the region\n";
  }
  info("wrote " + out_path + " (" + std::to_string(stations.size()) + " stations, skipped " +
       std::to_string(report.skipped) + " rows)");
  return 0;
}

int cmd_energy(const CommonOpts& opts) {
  const Scenario sc = effective_scenario(opts);
  ensure_out_dir(opts.out_dir);
  const auto stations = load_stations(opts.dataset_path, sc.region);

  // One task per (protocol, strategy, radius); merged in task order.
  struct Task {
    EnergyConfig config;
  };
  std::vector<Task> tasks;
  for (const EnergyConfig& base : energy_configs(sc)) {
    for (const double radius : base.radii_m) {
      EnergyConfig one = base;
      one.radii_m = {radius};
      tasks.push_back({std::move(one)});
    }
  }
  std::vector<EnergyResult> results(tasks.size());
  std::vector<EventLog> logs(tasks.size());
  run_pool(tasks.size(), opts.jobs, [&](std::size_t i) {
    debug("energy task " + std::to_string(i) + ": " + std::string(to_string(tasks[i].config.protocol)) +
          " " + std::string(to_string(tasks[i].config.strategy)) + " r=" +
          format_fixed(tasks[i].config.radii_m.front(), 1));
    results[i] = run_energy(tasks[i].config, stations, &logs[i]);
  });

  std::vector<EnergyRow> rows;
  std::vector<std::string> event_lines;
  event_lines.push_back(json{{"event", "header"}, {"seed", sc.seed}}.dump());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    rows.insert(rows.end(), results[i].rows.begin(), results[i].rows.end());
    event_lines.insert(event_lines.end(), logs[i].lines().begin(), logs[i].lines().end());
  }
  const std::string csv_path = (fs::path(opts.out_dir) / "energy.csv").string();
  write_energy_csv(rows, csv_path, sc.seed);
  const std::string events_path = (fs::path(opts.out_dir) / "energy_events.jsonl").string();
  write_lines(events_path, event_lines);
  info("wrote " + csv_path + " (" + std::to_string(rows.size()) + " rows) and " + events_path);
  return 0;
}

int cmd_qos(const CommonOpts& opts) {
  const Scenario sc = effective_scenario(opts);
  ensure_out_dir(opts.out_dir);
  const auto stations = load_stations(opts.dataset_path, sc.region);

  const QosConfig base = qos_config(sc);
  std::vector<QosConfig> tasks;
  for (const double radius : base.radii_m) {
    QosConfig one = base;
    one.radii_m = {radius};
    tasks.push_back(std::move(one));
  }
  std::vector<QosResult> results(tasks.size());
  std::vector<EventLog> logs(tasks.size());
  run_pool(tasks.size(), opts.jobs, [&](std::size_t i) {
    debug("qos task r=" + format_fixed(tasks[i].radii_m.front(), 1));
    results[i] = run_qos(tasks[i], stations, &logs[i]);
  });

  std::vector<QosRow> rows;
  std::vector<std::string> event_lines;
  event_lines.push_back(json{{"event", "header"}, {"seed", sc.seed}}.dump());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    rows.insert(rows.end(), results[i].rows.begin(), results[i].rows.end());
    event_lines.insert(event_lines.end(), logs[i].lines().begin(), logs[i].lines().end());
  }
  const std::string csv_path = (fs::path(opts.out_dir) / "qos.csv").string();
  write_qos_csv(rows, csv_path, sc.seed);
  const std::string events_path = (fs::path(opts.out_dir) / "qos_events.jsonl").string();
  write_lines(events_path, event_lines);
  info("wrote " + csv_path + " (" + std::to_string(rows.size()) + " rows) and " + events_path);
  return 0;
}

int cmd_simulate(const CommonOpts& opts) {
  Scenario sc = load_scenario(opts.scenario_path);
  if (opts.seed_given) sc.seed = opts.seed;
  ensure_out_dir(opts.out_dir);
  SimRun run = build_sim(sc);
  if (sc.run_until_tick) {
    run.run_until(*sc.run_until_tick);
  } else {
    run.run_to_quiescence();
  }
  const std::string trace_path = (fs::path(opts.out_dir) / "trace.jsonl").string();
  run.trace().write(trace_path);
  info("wrote " + trace_path + " (" + std::to_string(run.trace().size()) + " records)");
  return 0;
}

int cmd_validate(const CommonOpts& opts) {
  const Scenario sc = load_scenario(opts.scenario_path);
  const auto findings = validate_scenario(sc);
  for (const auto& f : findings) std::cout << f << "\n";
  if (findings.empty()) {
    info("scenario is clean");
    return 0;
  }
  std::cerr << "error: model: scenario has " << findings.size() << " finding(s)\n";
  return 1;
}

void add_common(CLI::App* sub, CommonOpts& opts, bool needs_dataset, bool needs_scenario,
                bool needs_out) {
  auto* dataset = sub->add_option("--dataset", opts.dataset_path, "Sitefinder-format CSV");
  auto* scenario = sub->add_option("--scenario", opts.scenario_path, "scenario JSON");
  auto* out = sub->add_option("--out", opts.out_dir, "output directory");
  if (needs_dataset) dataset->required();
  if (needs_scenario) scenario->required();
  if (needs_out) out->required();
  sub->add_option("--seed", opts.seed, "seed override (default 42)")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
  sub->add_option("--jobs", opts.jobs, "worker pool size for sweeps");
  sub->add_option("--radius-list", opts.radius_list, "comma-separated radii in meters");
  sub->add_option("--grid-spacing", opts.grid_spacing, "coverage grid spacing in meters");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-layer 5G SDN simulator"};
  app.require_subcommand(1);

  CommonOpts ingest_opts, energy_opts, qos_opts, sim_opts, validate_opts;
  auto* ingest = app.add_subcommand("ingest", "parse, project, and clip a dataset");
  add_common(ingest, ingest_opts, true, false, true);
  auto* energy = app.add_subcommand("energy", "base-station sleeping sweep");
  add_common(energy, energy_opts, true, false, true);
  auto* qos = app.add_subcommand("qos", "user-association utility sweep");
  add_common(qos, qos_opts, true, false, true);
  auto* simulate = app.add_subcommand("simulate", "run a scenario and write its trace");
  add_common(simulate, sim_opts, false, true, true);
  auto* validate = app.add_subcommand("validate", "check a scenario and list findings");
  add_common(validate, validate_opts, false, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 3;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_opts);
    if (energy->parsed()) return cmd_energy(energy_opts);
    if (qos->parsed()) return cmd_qos(qos_opts);
    if (simulate->parsed()) return cmd_simulate(sim_opts);
    if (validate->parsed()) return cmd_validate(validate_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == "config") return 3;
    if (e.code() == "io") return 2;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
