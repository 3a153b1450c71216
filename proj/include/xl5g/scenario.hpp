#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xl5g/controlplane.hpp"
#include "xl5g/dataplane.hpp"
#include "xl5g/experiments.hpp"
#include "xl5g/protocol_lib.hpp"
#include "xl5g/serialize.hpp"
#include "xl5g/virtualization.hpp"

namespace xl5g {

// Everything a run needs, loaded from one JSON file. Every section is
// optional; defaults reproduce the bundled study setup.
struct Scenario {
  std::uint64_t seed = 42;
  Region region = manchester_region();
  double grid_spacing_m = 100.0;
  std::vector<double> radii_m = default_radius_sweep();
  Thresholds thresholds;
  long status_epoch_ticks = SimRun::kDefaultEpochTicks;
  MissPolicy miss_policy = MissPolicy::DropOnMiss;

  std::vector<Protocol> energy_protocols = {Protocol::GSM, Protocol::UMTS};
  std::vector<EnergyStrategy> energy_strategies = {EnergyStrategy::IIT, EnergyStrategy::CIT};

  int qos_n_users = 10000;
  std::vector<QosStrategy> qos_strategies = {QosStrategy::Current, QosStrategy::IntraOPR,
                                             QosStrategy::InterOPR, QosStrategy::HeterSTRA};
  Protocol qos_protocol_for_1to3 = Protocol::UMTS;

  ModuleLibrary library = example_library();
  std::map<std::string, ProtocolChain> chains = {{"gsm-like", gsm_like_chain()},
                                                 {"umts-like", umts_like_chain()}};
  Topology topology;
  std::vector<std::pair<std::string, std::string>> deployments;  // (vbbu id str, chain name)

  struct SliceDef {
    int slice_id = 0;
    ElementId controller_id;
    std::vector<FlowMatch> regions;
    std::vector<ElementId> elements;
  };
  std::vector<SliceDef> slices;

  struct RuleInstall {
    ElementId target;
    std::string layer = "flow";  // "flow" | "phy"
    json rule;
  };
  std::vector<RuleInstall> preinstalled_rules;
  std::vector<RuleInstall> reactive_rules;

  struct PacketInject {
    long at_tick = 0;
    ElementId element;
    Packet packet;
  };
  std::vector<PacketInject> packets;

  struct QosInject {
    long at_tick = 0;
    QosEvent event;
  };
  std::vector<QosInject> qos_events;

  std::vector<StatusReport> preloaded_reports;
  std::optional<long> run_until_tick;
};

inline Region region_from_json(const json& j) {
  Region r = manchester_region();
  if (j.contains("origin")) {
    r.origin.latitude_deg = j.at("origin").value("latitude", r.origin.latitude_deg);
    r.origin.longitude_deg = j.at("origin").value("longitude", r.origin.longitude_deg);
  }
  r.width_m = j.value("width_m", r.width_m);
  r.height_m = j.value("height_m", r.height_m);
  if (r.width_m <= 0.0 || r.height_m <= 0.0) throw config_error("region extent must be positive");
  if (!r.origin.valid()) throw config_error("region origin out of range");
  return r;
}

inline Protocol protocol_from_json_string(const std::string& s) {
  auto p = parse_protocol(s);
  if (!p && s == "WLAN") p = Protocol::WLAN;
  if (!p) throw config_error("unknown protocol '" + s + "'");
  return *p;
}

inline Scenario scenario_from_json(const json& j) {
  Scenario sc;
  sc.seed = j.value("seed", sc.seed);
  if (j.contains("region")) sc.region = region_from_json(j.at("region"));
  sc.grid_spacing_m = j.value("grid_spacing_m", sc.grid_spacing_m);
  if (sc.grid_spacing_m <= 0.0) throw config_error("grid_spacing_m must be positive");
  if (j.contains("radii_m")) {
    sc.radii_m = j.at("radii_m").get<std::vector<double>>();
    check_radii(sc.radii_m);
  }
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    sc.thresholds.beamform = t.value("beamform", sc.thresholds.beamform);
    sc.thresholds.reroute = t.value("reroute", sc.thresholds.reroute);
    sc.thresholds.beamform_gain = t.value("beamform_gain", sc.thresholds.beamform_gain);
  }
  sc.status_epoch_ticks = j.value("status_epoch_ticks", sc.status_epoch_ticks);
  if (j.contains("miss_policy")) {
    const std::string mp = j.at("miss_policy").get<std::string>();
    if (mp == "drop") sc.miss_policy = MissPolicy::DropOnMiss;
    else if (mp == "to_controller") sc.miss_policy = MissPolicy::ToControllerOnMiss;
    else throw config_error("miss_policy must be 'drop' or 'to_controller'");
  }

  if (j.contains("energy")) {
    const json& e = j.at("energy");
    if (e.contains("protocols")) {
      sc.energy_protocols.clear();
      for (const auto& p : e.at("protocols")) {
        sc.energy_protocols.push_back(protocol_from_json_string(p.get<std::string>()));
      }
    }
    if (e.contains("strategies")) {
      sc.energy_strategies.clear();
      for (const auto& s : e.at("strategies")) {
        const auto st = parse_energy_strategy(s.get<std::string>());
        if (!st) throw config_error("unknown energy strategy");
        sc.energy_strategies.push_back(*st);
      }
    }
  }
  if (j.contains("qos")) {
    const json& q = j.at("qos");
    sc.qos_n_users = q.value("n_users", sc.qos_n_users);
    if (sc.qos_n_users < 0) throw config_error("n_users must be non-negative");
    if (q.contains("strategies")) {
      sc.qos_strategies.clear();
      for (const auto& s : q.at("strategies")) {
        const auto st = parse_qos_strategy(s.get<std::string>());
        if (!st) throw config_error("unknown qos strategy");
        sc.qos_strategies.push_back(*st);
      }
    }
    if (q.contains("protocol_for_1to3")) {
      sc.qos_protocol_for_1to3 =
          protocol_from_json_string(q.at("protocol_for_1to3").get<std::string>());
    }
  }

  if (j.contains("modules")) {
    ModuleLibrary lib;
    for (const auto& m : j.at("modules")) {
      WirelessModule module;
      module.name = m.at("name").get<std::string>();
      const auto in = parse_stage(m.at("in").get<std::string>());
      const auto out = parse_stage(m.at("out").get<std::string>());
      if (!in || !out) throw config_error("bad stage in module '" + module.name + "'");
      module.in_stage = *in;
      module.out_stage = *out;
      if (m.contains("params")) {
        for (const auto& [k, v] : m.at("params").items()) {
          module.params[k] = v.get<std::string>();
        }
      }
      lib.register_module(std::move(module));
    }
    sc.library = std::move(lib);
  }
  if (j.contains("chains")) {
    sc.chains.clear();
    for (const auto& c : j.at("chains")) {
      ProtocolChain chain;
      chain.protocol_name = c.at("protocol_name").get<std::string>();
      chain.module_names = c.at("modules").get<std::vector<std::string>>();
      sc.chains[chain.protocol_name] = std::move(chain);
    }
  }
  if (j.contains("topology")) sc.topology = topology_from_json(j.at("topology"), &sc.chains);
  if (j.contains("deploy")) {
    for (const auto& d : j.at("deploy")) {
      sc.deployments.emplace_back(d.at("vbbu").get<std::string>(),
                                  d.at("chain").get<std::string>());
    }
  }
  if (j.contains("slices")) {
    for (const auto& s : j.at("slices")) {
      Scenario::SliceDef def;
      def.slice_id = s.at("id").get<int>();
      def.controller_id = parse_element_id(s.value("controller", "CONTROLLER:0"));
      for (const auto& r : s.at("regions")) def.regions.push_back(flow_match_from_json(r));
      for (const auto& e : s.value("elements", json::array())) {
        def.elements.push_back(parse_element_id(e.get<std::string>()));
      }
      sc.slices.push_back(std::move(def));
    }
  }
  auto parse_installs = [](const json& arr) {
    std::vector<Scenario::RuleInstall> out;
    for (const auto& r : arr) {
      Scenario::RuleInstall install;
      install.target = parse_element_id(r.at("target").get<std::string>());
      install.layer = r.value("layer", std::string("flow"));
      if (install.layer != "flow" && install.layer != "phy") {
        throw config_error("rule layer must be 'flow' or 'phy'");
      }
      install.rule = r.at("rule");
      out.push_back(std::move(install));
    }
    return out;
  };
  if (j.contains("rules")) sc.preinstalled_rules = parse_installs(j.at("rules"));
  if (j.contains("reactive_rules")) sc.reactive_rules = parse_installs(j.at("reactive_rules"));
  if (j.contains("packets")) {
    for (const auto& p : j.at("packets")) {
      Scenario::PacketInject inj;
      inj.at_tick = p.value("at_tick", 0L);
      inj.element = parse_element_id(p.at("element").get<std::string>());
      inj.packet.packet_id = p.at("packet_id").get<long>();
      inj.packet.size_bytes = p.value("size_bytes", 100);
      inj.packet.header = packet_header_from_json(p.value("header", json::object()));
      sc.packets.push_back(std::move(inj));
    }
  }
  if (j.contains("qos_events")) {
    for (const auto& q : j.at("qos_events")) {
      Scenario::QosInject inj;
      inj.at_tick = q.value("at_tick", 0L);
      inj.event.user_id = q.at("user_id").get<int>();
      inj.event.serving_cell = parse_element_id(q.at("serving_cell").get<std::string>());
      inj.event.utility = q.at("utility").get<double>();
      inj.event.at_boundary = q.value("at_boundary", false);
      sc.qos_events.push_back(std::move(inj));
    }
  }
  if (j.contains("status_reports")) {
    for (const auto& r : j.at("status_reports")) {
      sc.preloaded_reports.push_back(status_report_from_json(r));
    }
  }
  if (j.contains("run_until")) sc.run_until_tick = j.at("run_until").get<long>();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read scenario '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw config_error("scenario '" + path + "': " + e.what());
  }
}

inline SliceRegistry build_slices(const Scenario& sc) {
  SliceRegistry registry;
  for (const auto& def : sc.slices) {
    registry.create_slice(def.slice_id, FlowSpace{def.regions}, def.controller_id);
    for (const auto& e : def.elements) registry.bind_element(def.slice_id, e);
  }
  return registry;
}

inline Topology build_topology(const Scenario& sc) {
  Topology t = sc.topology;
  for (const auto& [vbbu_s, chain_name] : sc.deployments) {
    const ElementId id = parse_element_id(vbbu_s);
    const auto* v = t.find_as<VirtualElement>(id);
    if (v == nullptr) throw config_error("deploy target " + vbbu_s + " not in topology");
    auto chain_it = sc.chains.find(chain_name);
    if (chain_it == sc.chains.end()) throw config_error("unknown chain '" + chain_name + "'");
    VirtualElement updated = *v;
    deploy_protocol(updated, chain_it->second, sc.library);
    t.replace_element(updated);
  }
  return t;
}

// Builds the simulator: slices and chains first, then agents, preloaded
// status, provisioned rules, and finally the injected work.
inline SimRun build_sim(const Scenario& sc) {
  SimRun run(build_topology(sc), build_slices(sc), sc.library, sc.thresholds, sc.seed,
             sc.status_epoch_ticks);
  run.set_miss_policy(sc.miss_policy);
  for (const auto& r : sc.preloaded_reports) run.db().report_status(r);
  for (const auto& install : sc.preinstalled_rules) {
    if (install.layer == "flow") {
      run.preinstall(install.target, flow_rule_from_json(install.rule));
    } else {
      run.preinstall(install.target, phy_rule_from_json(install.rule));
    }
  }
  for (const auto& install : sc.reactive_rules) {
    if (install.layer != "flow") throw config_error("reactive rules must be flow rules");
    run.add_reactive_rule(install.target, flow_rule_from_json(install.rule));
  }
  for (const auto& p : sc.packets) run.inject_packet(p.element, p.packet, p.at_tick);
  for (const auto& q : sc.qos_events) run.inject_qos_event(q.event, q.at_tick);
  return run;
}

inline std::vector<EnergyConfig> energy_configs(const Scenario& sc) {
  std::vector<EnergyConfig> configs;
  for (const Protocol p : sc.energy_protocols) {
    for (const EnergyStrategy s : sc.energy_strategies) {
      EnergyConfig c;
      c.protocol = p;
      c.strategy = s;
      c.radii_m = sc.radii_m;
      c.grid_spacing_m = sc.grid_spacing_m;
      c.seed = sc.seed;
      c.region = sc.region;
      configs.push_back(std::move(c));
    }
  }
  return configs;
}

inline QosConfig qos_config(const Scenario& sc) {
  QosConfig c;
  c.n_users = sc.qos_n_users;
  c.radii_m = sc.radii_m;
  c.strategies = sc.qos_strategies;
  c.protocol_for_1to3 = sc.qos_protocol_for_1to3;
  c.seed = sc.seed;
  c.region = sc.region;
  return c;
}

// Findings are human-readable strings; empty means clean.
inline std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> findings;
  Topology topology;
  try {
    topology = build_topology(sc);
  } catch (const Error& e) {
    findings.push_back(std::string("topology: ") + e.what());
    topology = sc.topology;
  }
  for (const auto& v : topology.validate(&sc.library)) {
    findings.push_back("topology " + v.element.str() + ": " + v.rule);
  }
  for (const auto& [name, chain] : sc.chains) {
    const ChainCheck check = validate_chain(sc.library, chain);
    if (!check.valid) {
      findings.push_back("chain '" + name + "': " + check.reason);
    }
  }
  for (std::size_t i = 0; i < sc.slices.size(); ++i) {
    for (std::size_t k = i + 1; k < sc.slices.size(); ++k) {
      if (flowspace_overlap(FlowSpace{sc.slices[i].regions}, FlowSpace{sc.slices[k].regions})) {
        findings.push_back("slice " + std::to_string(sc.slices[i].slice_id) +
                           " overlaps slice " + std::to_string(sc.slices[k].slice_id));
      }
    }
  }
  for (const auto& def : sc.slices) {
    for (const auto& e : def.elements) {
      if (!topology.has(e)) {
        findings.push_back("slice " + std::to_string(def.slice_id) + " references missing " +
                           e.str());
      }
    }
  }
  return findings;
}

}  // namespace xl5g
