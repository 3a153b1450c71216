#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xl5g/flowspace.hpp"
#include "xl5g/match.hpp"
#include "xl5g/netmodel.hpp"
#include "xl5g/ruletable.hpp"
#include "xl5g/util.hpp"
#include "xl5g/virtualization.hpp"

namespace xl5g {

using json = nlohmann::json;

// Line-delimited JSON sink shared by the control plane, the simulator trace,
// and the experiment drivers. nlohmann objects keep keys sorted, so dumps are
// byte-stable.
class EventLog {
 public:
  void append(const json& record) { lines_.push_back(record.dump()); }

  const std::vector<std::string>& lines() const { return lines_; }
  std::size_t size() const { return lines_.size(); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (const auto& line : lines_) out << line << "\n";
  }

 private:
  std::vector<std::string> lines_;
};

// ---- match fields ----

inline json to_json(const PrefixField& f) {
  if (f.is_wildcard()) return "*";
  return ipv4_to_string(f.value) + "/" + std::to_string(f.prefix_len);
}

inline PrefixField prefix_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "*") return PrefixField::any();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return PrefixField::exact(ipv4_from_string(s));
    const unsigned len = static_cast<unsigned>(std::stoul(s.substr(slash + 1)));
    return PrefixField::prefix(ipv4_from_string(s.substr(0, slash)), len);
  }
  throw config_error("prefix field must be a string like '10.0.0.0/8' or '*'");
}

template <typename T>
json to_json(const WildcardField<T>& f) {
  if (f.is_wildcard()) return "*";
  return static_cast<std::uint64_t>(*f.value);
}

template <typename T>
WildcardField<T> wildcard_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "*") return WildcardField<T>::any();
  if (j.is_number_unsigned() || j.is_number_integer()) {
    return WildcardField<T>::exact(static_cast<T>(j.get<std::uint64_t>()));
  }
  throw config_error("wildcard field must be '*' or an integer");
}

inline json to_json(const FlowMatch& m) {
  json j = json::object();
  j["src_ip"] = to_json(m.src_ip);
  j["dst_ip"] = to_json(m.dst_ip);
  j["src_port"] = to_json(m.src_port);
  j["dst_port"] = to_json(m.dst_port);
  j["proto"] = to_json(m.transport_proto);
  j["service_tag"] = to_json(m.service_tag);
  return j;
}

// Absent keys mean wildcard, which keeps rule fixtures short.
inline FlowMatch flow_match_from_json(const json& j) {
  FlowMatch m;
  if (j.contains("src_ip")) m.src_ip = prefix_from_json(j.at("src_ip"));
  if (j.contains("dst_ip")) m.dst_ip = prefix_from_json(j.at("dst_ip"));
  if (j.contains("src_port")) m.src_port = wildcard_from_json<std::uint16_t>(j.at("src_port"));
  if (j.contains("dst_port")) m.dst_port = wildcard_from_json<std::uint16_t>(j.at("dst_port"));
  if (j.contains("proto")) m.transport_proto = wildcard_from_json<std::uint8_t>(j.at("proto"));
  if (j.contains("service_tag")) {
    m.service_tag = wildcard_from_json<std::uint16_t>(j.at("service_tag"));
  }
  return m;
}

inline std::optional<EncodingMode> parse_encoding(const std::string& s) {
  if (s == "convolutional") return EncodingMode::Convolutional;
  if (s == "turbo") return EncodingMode::Turbo;
  if (s == "ldpc") return EncodingMode::Ldpc;
  return std::nullopt;
}

inline std::optional<Modulation> parse_modulation(const std::string& s) {
  if (s == "GMSK") return Modulation::GMSK;
  if (s == "QPSK") return Modulation::QPSK;
  if (s == "QAM16") return Modulation::QAM16;
  if (s == "QAM64") return Modulation::QAM64;
  return std::nullopt;
}

inline json to_json(const PhyMatch& m) {
  json j = json::object();
  j["encoding_mode"] = m.encoding_mode.is_wildcard()
                           ? json("*")
                           : json(to_string(*m.encoding_mode.value));
  j["modulation"] = m.modulation_type.is_wildcard()
                        ? json("*")
                        : json(to_string(*m.modulation_type.value));
  j["carrier_id"] = to_json(m.carrier_id);
  j["cell_id"] = to_json(m.cell_id);
  j["user_group"] = to_json(m.user_group);
  return j;
}

inline PhyMatch phy_match_from_json(const json& j) {
  PhyMatch m;
  if (j.contains("encoding_mode") && j.at("encoding_mode") != "*") {
    const auto e = parse_encoding(j.at("encoding_mode").get<std::string>());
    if (!e) throw config_error("bad encoding mode");
    m.encoding_mode = WildcardField<EncodingMode>::exact(*e);
  }
  if (j.contains("modulation") && j.at("modulation") != "*") {
    const auto mod = parse_modulation(j.at("modulation").get<std::string>());
    if (!mod) throw config_error("bad modulation");
    m.modulation_type = WildcardField<Modulation>::exact(*mod);
  }
  if (j.contains("carrier_id")) m.carrier_id = wildcard_from_json<std::uint16_t>(j.at("carrier_id"));
  if (j.contains("cell_id")) m.cell_id = wildcard_from_json<std::uint16_t>(j.at("cell_id"));
  if (j.contains("user_group")) m.user_group = wildcard_from_json<std::uint16_t>(j.at("user_group"));
  return m;
}

// ---- actions and rules ----

inline json to_json(const FlowAction& a) {
  json j = json::object();
  if (const auto* f = std::get_if<flow_action::Forward>(&a)) {
    j["type"] = "forward";
    j["dest"] = f->dest.str();
    if (!f->unlimited()) j["rate_limit_mbps"] = f->rate_limit_mbps;
  } else if (std::holds_alternative<flow_action::Drop>(a)) {
    j["type"] = "drop";
  } else {
    j["type"] = "to_controller";
  }
  return j;
}

inline FlowAction flow_action_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "forward") {
    flow_action::Forward f;
    f.dest = parse_element_id(j.at("dest").get<std::string>());
    if (j.contains("rate_limit_mbps")) f.rate_limit_mbps = j.at("rate_limit_mbps").get<double>();
    return f;
  }
  if (type == "drop") return flow_action::Drop{};
  if (type == "to_controller") return flow_action::ToController{};
  throw config_error("unknown flow action type '" + type + "'");
}

inline json to_json(const PhyAction& a) {
  json j = json::object();
  if (const auto* p = std::get_if<phy_action::SetPower>(&a)) {
    j["type"] = "set_power";
    j["dbm"] = p->dbm;
  } else if (const auto* b = std::get_if<phy_action::Beamform>(&a)) {
    j["type"] = "beamform";
    j["target_user"] = b->target_user;
    j["gain"] = b->gain;
  } else if (const auto* c = std::get_if<phy_action::CancelInterference>(&a)) {
    j["type"] = "cancel_interference";
    j["neighbor_cell"] = c->neighbor_cell;
  } else if (const auto* m = std::get_if<phy_action::SetModulation>(&a)) {
    j["type"] = "set_modulation";
    j["modulation"] = to_string(m->modulation_type);
  }
  return j;
}

inline PhyAction phy_action_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "set_power") return phy_action::SetPower{j.at("dbm").get<double>()};
  if (type == "beamform") {
    return phy_action::Beamform{j.at("target_user").get<int>(), j.at("gain").get<double>()};
  }
  if (type == "cancel_interference") {
    return phy_action::CancelInterference{j.at("neighbor_cell").get<int>()};
  }
  if (type == "set_modulation") {
    const auto m = parse_modulation(j.at("modulation").get<std::string>());
    if (!m) throw config_error("bad modulation");
    return phy_action::SetModulation{*m};
  }
  throw config_error("unknown phy action type '" + type + "'");
}

inline json to_json(const FlowRule& r) {
  json j = json::object();
  j["rule_id"] = r.rule_id;
  j["priority"] = r.priority;
  j["match"] = to_json(r.match);
  json actions = json::array();
  for (const auto& a : r.actions) actions.push_back(to_json(a));
  j["actions"] = actions;
  return j;
}

inline FlowRule flow_rule_from_json(const json& j) {
  FlowRule r;
  r.rule_id = j.at("rule_id").get<int>();
  r.priority = j.value("priority", 0);
  if (j.contains("match")) r.match = flow_match_from_json(j.at("match"));
  for (const auto& a : j.at("actions")) r.actions.push_back(flow_action_from_json(a));
  check_rule_invariants(r);
  return r;
}

inline json to_json(const PhyRule& r) {
  json j = json::object();
  j["rule_id"] = r.rule_id;
  j["priority"] = r.priority;
  j["match"] = to_json(r.match);
  json actions = json::array();
  for (const auto& a : r.actions) actions.push_back(to_json(a));
  j["actions"] = actions;
  return j;
}

inline PhyRule phy_rule_from_json(const json& j) {
  PhyRule r;
  r.rule_id = j.at("rule_id").get<int>();
  r.priority = j.value("priority", 0);
  if (j.contains("match")) r.match = phy_match_from_json(j.at("match"));
  for (const auto& a : j.at("actions")) r.actions.push_back(phy_action_from_json(a));
  check_rule_invariants(r);
  return r;
}

// ---- packets ----

inline json to_json(const PacketHeader& h) {
  json j = json::object();
  j["src_ip"] = ipv4_to_string(h.src_ip);
  j["dst_ip"] = ipv4_to_string(h.dst_ip);
  j["src_port"] = h.src_port;
  j["dst_port"] = h.dst_port;
  j["proto"] = h.transport_proto;
  j["service_tag"] = h.service_tag;
  return j;
}

inline PacketHeader packet_header_from_json(const json& j) {
  PacketHeader h;
  if (j.contains("src_ip")) h.src_ip = ipv4_from_string(j.at("src_ip").get<std::string>());
  if (j.contains("dst_ip")) h.dst_ip = ipv4_from_string(j.at("dst_ip").get<std::string>());
  h.src_port = j.value("src_port", 0);
  h.dst_port = j.value("dst_port", 0);
  h.transport_proto = static_cast<std::uint8_t>(j.value("proto", 0));
  h.service_tag = j.value("service_tag", 0);
  return h;
}

// ---- topology ----

inline json to_json(const Topology& t) {
  json elements = json::array();
  for (const auto& [id, e] : t.elements()) {
    json je = json::object();
    je["kind"] = to_string(id.kind);
    je["index"] = id.index;
    if (const auto* p = std::get_if<PhysicalProcessor>(&e)) {
      je["cpu_units"] = p->cpu_units;
      je["storage_units"] = p->storage_units;
    } else if (const auto* r = std::get_if<PRRU>(&e)) {
      je["x_m"] = r->location.x_m;
      je["y_m"] = r->location.y_m;
      json vrrus = json::array();
      for (const auto& v : r->vrru_ids) vrrus.push_back(v.str());
      je["vrrus"] = vrrus;
    } else if (const auto* v = std::get_if<VirtualElement>(&e)) {
      je["host"] = v->host.str();
      if (v->protocol) je["protocol"] = to_string(*v->protocol);
      if (v->allocation_id) je["allocation_id"] = *v->allocation_id;
      if (v->deployed_chain) je["chain"] = v->deployed_chain->protocol_name;
      if (v->slice_id) je["slice"] = *v->slice_id;
    }
    elements.push_back(je);
  }
  json links = json::array();
  for (const auto& l : t.links()) {
    json jl = json::object();
    jl["a"] = l.a.str();
    jl["b"] = l.b.str();
    jl["capacity_mbps"] = l.capacity_mbps;
    links.push_back(jl);
  }
  json j = json::object();
  j["elements"] = elements;
  j["links"] = links;
  return j;
}

// Hosts are added before the virtual elements that reference them, so array
// order in the file does not matter. Chains are resolved by name when the
// named chain map is supplied.
inline Topology topology_from_json(const json& j,
                                   const std::map<std::string, ProtocolChain>* chains = nullptr) {
  Topology t;
  const json& elements = j.value("elements", json::array());
  auto id_of = [](const json& je) {
    return ElementId{parse_element_id(je.at("kind").get<std::string>() + ":" +
                                      std::to_string(je.at("index").get<int>()))};
  };
  for (const auto& je : elements) {
    const ElementId id = id_of(je);
    if (id.kind == ElementKind::PROCESSOR) {
      t.add_element(PhysicalProcessor{id, je.value("cpu_units", 0), je.value("storage_units", 0)});
    } else if (id.kind == ElementKind::PRRU) {
      PRRU p;
      p.id = id;
      p.location = PlanarPoint{je.value("x_m", 0.0), je.value("y_m", 0.0)};
      t.add_element(p);
    } else if (id.kind == ElementKind::CONTROLLER) {
      // The controller is addressable but has no stored state of its own;
      // it is represented as a zero-capacity processor record.
      t.add_element(PhysicalProcessor{id, 0, 0});
    }
  }
  for (const auto& je : elements) {
    const ElementId id = id_of(je);
    if (id.kind == ElementKind::PROCESSOR || id.kind == ElementKind::PRRU ||
        id.kind == ElementKind::CONTROLLER) {
      continue;
    }
    VirtualElement v;
    v.id = id;
    v.host = parse_element_id(je.at("host").get<std::string>());
    if (je.contains("protocol")) {
      const std::string ps = je.at("protocol").get<std::string>();
      auto p = parse_protocol(ps);
      if (!p && ps == "WLAN") p = Protocol::WLAN;
      if (!p) throw config_error("bad protocol in element " + id.str());
      v.protocol = p;
    }
    if (je.contains("allocation_id")) v.allocation_id = je.at("allocation_id").get<int>();
    if (je.contains("slice")) v.slice_id = je.at("slice").get<int>();
    if (je.contains("chain") && chains) {
      auto it = chains->find(je.at("chain").get<std::string>());
      if (it == chains->end()) {
        throw config_error("element " + id.str() + " references unknown chain");
      }
      v.deployed_chain = it->second;
    }
    t.add_element(v);
    if (id.kind == ElementKind::VRRU) {
      if (const auto* prru = t.find_as<PRRU>(v.host)) {
        PRRU updated = *prru;
        updated.vrru_ids.insert(id);
        t.replace_element(updated);
      }
    }
  }
  for (const auto& jl : j.value("links", json::array())) {
    t.add_link(parse_element_id(jl.at("a").get<std::string>()),
               parse_element_id(jl.at("b").get<std::string>()),
               jl.value("capacity_mbps", 0.0));
  }
  return t;
}

inline json to_json(const Slice& s) {
  json j = json::object();
  j["id"] = s.slice_id;
  j["controller"] = s.controller_id.str();
  json regions = json::array();
  for (const auto& r : s.space.regions) regions.push_back(to_json(r));
  j["regions"] = regions;
  json elements = json::array();
  for (const auto& e : s.element_ids) elements.push_back(e.str());
  j["elements"] = elements;
  return j;
}

}  // namespace xl5g
