#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xl5g/netmodel.hpp"
#include "xl5g/ruletable.hpp"
#include "xl5g/serialize.hpp"
#include "xl5g/virtualization.hpp"

namespace xl5g {

struct StatusReport {
  ElementId element_id;
  long timestamp = 0;  // simulation ticks
  double load_pct = 0.0;
  int user_count = 0;
  std::optional<double> min_user_utility;
  std::optional<bool> boundary_interference_flag;
};

inline json to_json(const StatusReport& r) {
  json j = json::object();
  j["element"] = r.element_id.str();
  j["timestamp"] = r.timestamp;
  j["load_pct"] = r.load_pct;
  j["user_count"] = r.user_count;
  if (r.min_user_utility) j["min_user_utility"] = *r.min_user_utility;
  if (r.boundary_interference_flag) j["boundary_interference"] = *r.boundary_interference_flag;
  return j;
}

inline StatusReport status_report_from_json(const json& j) {
  StatusReport r;
  r.element_id = parse_element_id(j.at("element").get<std::string>());
  r.timestamp = j.value("timestamp", 0L);
  r.load_pct = j.value("load_pct", 0.0);
  r.user_count = j.value("user_count", 0);
  if (j.contains("min_user_utility")) r.min_user_utility = j.at("min_user_utility").get<double>();
  if (j.contains("boundary_interference")) {
    r.boundary_interference_flag = j.at("boundary_interference").get<bool>();
  }
  return r;
}

struct QosEvent {
  int user_id = 0;
  ElementId serving_cell;
  double utility = 0.0;  // in [0, 1]
  bool at_boundary = false;
};

inline json to_json(const QosEvent& e) {
  json j = json::object();
  j["user_id"] = e.user_id;
  j["serving_cell"] = e.serving_cell.str();
  j["utility"] = e.utility;
  j["at_boundary"] = e.at_boundary;
  return j;
}

struct Thresholds {
  double beamform = 0.3;  // utility below this adds a Beamform install
  double reroute = 0.5;   // utility below this adds a Forward reroute
  double beamform_gain = 0.5;
};

// Static configuration snapshot plus the latest dynamic status per element.
class GlobalViewDB {
 public:
  GlobalViewDB(Topology topology, SliceRegistry slices, ModuleLibrary library)
      : topology_(std::move(topology)),
        slices_(std::move(slices)),
        library_(std::move(library)) {}

  static constexpr int kHistoryBound = 64;

  const Topology& topology() const { return topology_; }
  const SliceRegistry& slices() const { return slices_; }
  const ModuleLibrary& library() const { return library_; }

  // Accepts the report unless its timestamp regresses; regressions are
  // counted, not thrown. Unknown elements are an error.
  bool report_status(const StatusReport& report) {
    if (!topology_.has(report.element_id)) {
      throw model_error("status report for unknown element " + report.element_id.str());
    }
    auto& slot = dynamic_[report.element_id];
    if (!slot.history.empty() && report.timestamp < slot.history.back().timestamp) {
      ++regression_count_;
      return false;
    }
    slot.history.push_back(report);
    if (slot.history.size() > kHistoryBound) slot.history.pop_front();
    return true;
  }

  const StatusReport* query_latest(const ElementId& id) const {
    if (!topology_.has(id)) throw model_error("unknown element " + id.str());
    auto it = dynamic_.find(id);
    if (it == dynamic_.end() || it->second.history.empty()) return nullptr;
    return &it->second.history.back();
  }

  const std::deque<StatusReport>* history(const ElementId& id) const {
    auto it = dynamic_.find(id);
    return it == dynamic_.end() ? nullptr : &it->second.history;
  }

  long regression_count() const { return regression_count_; }

  SliceRegistry& mutable_slices() { return slices_; }
  Topology& mutable_topology() { return topology_; }

 private:
  struct Slot {
    std::deque<StatusReport> history;  // back() is the latest accepted
  };

  Topology topology_;
  SliceRegistry slices_;
  ModuleLibrary library_;
  std::map<ElementId, Slot> dynamic_;
  long regression_count_ = 0;
};

struct JointDecision {
  std::vector<std::pair<ElementId, FlowRule>> flow_installs;
  std::vector<std::pair<ElementId, PhyRule>> phy_installs;

  bool empty() const { return flow_installs.empty() && phy_installs.empty(); }
};

inline json to_json(const JointDecision& d) {
  json flows = json::array();
  for (const auto& [target, rule] : d.flow_installs) {
    json j = json::object();
    j["target"] = target.str();
    j["rule"] = to_json(rule);
    flows.push_back(j);
  }
  json phys = json::array();
  for (const auto& [target, rule] : d.phy_installs) {
    json j = json::object();
    j["target"] = target.str();
    j["rule"] = to_json(rule);
    phys.push_back(j);
  }
  json j = json::object();
  j["flow_installs"] = flows;
  j["phy_installs"] = phys;
  return j;
}

namespace detail {

// Rule ids are a pure function of (user, clause) so repeated decisions for
// the same cause collide instead of piling up.
inline int decision_rule_id(int user_id, int clause) { return user_id * 8 + clause; }

}  // namespace detail

// Decomposes one QoS event into flow-layer and PHY-layer installs:
//   (a) utility < beamform threshold       -> Beamform at the serving cell
//   (b) boundary user + interference flag  -> CancelInterference naming the
//       strongest neighbor (max user_count, tie lowest id)
//   (c) utility < reroute threshold        -> Forward the user's service_tag
//       to the least-loaded vBBU of the slice owning that tag
// Pure in (db, event, thresholds); clause guards are downward-closed in
// utility, so lower utility never removes an install.
inline JointDecision joint_optimize(const GlobalViewDB& db, const QosEvent& event,
                                    const Thresholds& thresholds = {}) {
  if (!db.topology().has(event.serving_cell)) {
    throw model_error("unknown serving cell " + event.serving_cell.str());
  }
  JointDecision decision;

  if (event.utility < thresholds.beamform) {
    PhyRule rule;
    rule.rule_id = detail::decision_rule_id(event.user_id, 0);
    rule.priority = 100;
    rule.match.cell_id =
        WildcardField<std::uint16_t>::exact(static_cast<std::uint16_t>(event.serving_cell.index));
    rule.actions.push_back(phy_action::Beamform{event.user_id, thresholds.beamform_gain});
    decision.phy_installs.emplace_back(event.serving_cell, rule);
  }

  const StatusReport* serving = db.query_latest(event.serving_cell);
  if (event.at_boundary && serving && serving->boundary_interference_flag.value_or(false)) {
    const StatusReport* strongest = nullptr;
    for (const auto& [id, e] : db.topology().elements()) {
      if (id.kind != event.serving_cell.kind || id == event.serving_cell) continue;
      const StatusReport* r = db.query_latest(id);
      if (r == nullptr) continue;
      if (strongest == nullptr || r->user_count > strongest->user_count) strongest = r;
    }
    if (strongest != nullptr) {
      PhyRule rule;
      rule.rule_id = detail::decision_rule_id(event.user_id, 1);
      rule.priority = 100;
      rule.match.cell_id = WildcardField<std::uint16_t>::exact(
          static_cast<std::uint16_t>(event.serving_cell.index));
      rule.actions.push_back(phy_action::CancelInterference{strongest->element_id.index});
      decision.phy_installs.emplace_back(event.serving_cell, rule);
    }
  }

  if (event.utility < thresholds.reroute) {
    FlowMatch match;
    match.service_tag =
        WildcardField<std::uint16_t>::exact(static_cast<std::uint16_t>(event.user_id & 0xFFFF));
    const Slice* slice = db.slices().owner_of(match);
    if (slice != nullptr) {
      const VirtualElement* best = nullptr;
      double best_load = 0.0;
      for (const auto& eid : slice->element_ids) {
        if (eid.kind != ElementKind::VBBU) continue;
        const auto* v = db.topology().find_as<VirtualElement>(eid);
        if (v == nullptr) continue;
        const StatusReport* r = db.query_latest(eid);
        const double load = r ? r->load_pct : 0.0;  // never-reported vBBU counts as idle
        if (best == nullptr || load < best_load) {
          best = v;
          best_load = load;
        }
      }
      if (best != nullptr) {
        FlowRule rule;
        rule.rule_id = detail::decision_rule_id(event.user_id, 2);
        rule.priority = 100;
        rule.match = match;
        rule.actions.push_back(flow_action::Forward{best->id, 0.0});
        decision.flow_installs.emplace_back(event.serving_cell, rule);
      }
    }
  }

  return decision;
}

// View over the data plane's tables used by rule pushes; the simulator and
// the unit tests both provide one.
struct AgentHub {
  std::map<ElementId, FlowTable*> flow_tables;
  std::map<ElementId, PhyTable*> phy_tables;
};

struct InstallRecord {
  ElementId target;
  std::string layer;  // "flow" | "phy"
  int rule_id = 0;
  std::string reason;  // set when rejected
};

struct DeliveryReport {
  std::vector<InstallRecord> accepted;
  std::vector<InstallRecord> rejected;
};

// Delivers each install to its target agent. Flow rules pass slice admission
// first; any failure becomes a rejected entry, never an exception.
inline DeliveryReport push_decision(const JointDecision& decision, AgentHub& agents,
                                    const SliceRegistry& slices, EventLog* log = nullptr) {
  DeliveryReport report;
  for (const auto& [target, rule] : decision.flow_installs) {
    InstallRecord rec{target, "flow", rule.rule_id, ""};
    const Slice* slice = slices.owner_of(rule.match);
    if (slice == nullptr) {
      rec.reason = "no slice admits the rule's match";
      report.rejected.push_back(rec);
      continue;
    }
    const AdmitResult admit = admit_rule(*slice, rule);
    if (!admit.admitted) {
      rec.reason = admit.reason;
      report.rejected.push_back(rec);
      continue;
    }
    auto it = agents.flow_tables.find(target);
    if (it == agents.flow_tables.end()) {
      rec.reason = "no agent for target";
      report.rejected.push_back(rec);
      continue;
    }
    try {
      it->second->install_rule(rule);
      report.accepted.push_back(rec);
    } catch (const Error& e) {
      rec.reason = e.what();
      report.rejected.push_back(rec);
    }
  }
  for (const auto& [target, rule] : decision.phy_installs) {
    InstallRecord rec{target, "phy", rule.rule_id, ""};
    auto it = agents.phy_tables.find(target);
    if (it == agents.phy_tables.end()) {
      rec.reason = "no agent for target";
      report.rejected.push_back(rec);
      continue;
    }
    try {
      it->second->install_rule(rule);
      report.accepted.push_back(rec);
    } catch (const Error& e) {
      rec.reason = e.what();
      report.rejected.push_back(rec);
    }
  }
  if (log != nullptr) {
    json j = json::object();
    j["event"] = "push_decision";
    j["decision"] = to_json(decision);
    json accepted = json::array();
    for (const auto& r : report.accepted) {
      accepted.push_back({{"target", r.target.str()}, {"layer", r.layer}, {"rule_id", r.rule_id}});
    }
    json rejected = json::array();
    for (const auto& r : report.rejected) {
      rejected.push_back({{"target", r.target.str()},
                          {"layer", r.layer},
                          {"rule_id", r.rule_id},
                          {"reason", r.reason}});
    }
    j["accepted"] = accepted;
    j["rejected"] = rejected;
    log->append(j);
  }
  return report;
}

}  // namespace xl5g
