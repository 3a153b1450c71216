#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "xl5g/controlplane.hpp"
#include "xl5g/netmodel.hpp"
#include "xl5g/ruletable.hpp"
#include "xl5g/serialize.hpp"

namespace xl5g {

struct Packet {
  PacketHeader header;
  int size_bytes = 0;
  long packet_id = 0;
};

inline json to_json(const Packet& p) {
  json j = json::object();
  j["header"] = to_json(p.header);
  j["size_bytes"] = p.size_bytes;
  j["packet_id"] = p.packet_id;
  return j;
}

// One agent per forwarding element; wraps the element's tables and the
// per-rule rate-limit token state.
struct SdnAgent {
  ElementId element_id;
  FlowTable table;
  PhyTable phy_table;

  struct RateWindow {
    long tick = -1;
    double bytes_used = 0.0;
  };
  std::map<int, RateWindow> rate_state;  // keyed by rule_id

  // Counters feeding the periodic status report; reset each epoch.
  long packets_since_epoch = 0;
  std::set<std::uint16_t> tags_since_epoch;

  explicit SdnAgent(ElementId id = {}, MissPolicy policy = MissPolicy::DropOnMiss)
      : element_id(id), table(policy) {}
};

namespace sim_event {
struct PacketArrival {
  ElementId element;
  Packet packet;
  bool is_retry = false;
};
struct StatusEpoch {};
struct ControlDelivery {
  ElementId target;
  std::variant<FlowRule, PhyRule> install;
};
struct QosArrival {
  QosEvent event;
};
}  // namespace sim_event

struct SimEvent {
  long at_tick = 0;
  long seq = 0;
  std::variant<sim_event::PacketArrival, sim_event::StatusEpoch, sim_event::ControlDelivery,
               sim_event::QosArrival>
      payload;

  bool operator<(const SimEvent& o) const {
    return at_tick != o.at_tick ? at_tick < o.at_tick : seq < o.seq;
  }
};

// Deterministic discrete-event run: 1 ms ticks, 1-tick hop latency, events
// processed in (at_tick, seq) order. The trace is a pure function of the
// scenario and seed.
class SimRun {
 public:
  // Rate budget per tick: 1 Mbps = 125 bytes per 1 ms tick.
  static constexpr double kBytesPerTickPerMbps = 125.0;
  static constexpr long kDefaultEpochTicks = 100;

  SimRun(Topology topology, SliceRegistry slices, ModuleLibrary library,
         Thresholds thresholds = {}, std::uint64_t seed = 42,
         long epoch_ticks = kDefaultEpochTicks)
      : db_(std::move(topology), std::move(slices), std::move(library)),
        thresholds_(thresholds),
        seed_(seed),
        epoch_ticks_(epoch_ticks) {
    for (const auto& [id, e] : db_.topology().elements()) {
      if (detail::forwarding_layer(id.kind) >= 0) {
        agents_.emplace(id, SdnAgent{id, MissPolicy::DropOnMiss});
      }
    }
    json header = json::object();
    header["event"] = "header";
    header["seed"] = seed_;
    trace_.append(header);
    if (epoch_ticks_ > 0 && !agents_.empty()) enqueue(epoch_ticks_, sim_event::StatusEpoch{});
  }

  GlobalViewDB& db() { return db_; }
  const GlobalViewDB& db() const { return db_; }
  long clock() const { return clock_; }
  const EventLog& trace() const { return trace_; }
  std::map<ElementId, SdnAgent>& agents() { return agents_; }
  const std::map<ElementId, SdnAgent>& agents() const { return agents_; }

  SdnAgent& agent(const ElementId& id) {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw model_error("no agent for " + id.str());
    return it->second;
  }

  void set_miss_policy(MissPolicy policy) {
    for (auto& [id, a] : agents_) a.table.set_miss_policy(policy);
  }

  // Provisioned rules are scenario state, not controller decisions; they
  // bypass slice admission and are traced as preinstalls.
  void preinstall(const ElementId& target, const FlowRule& rule) {
    agent(target).table.install_rule(rule);
    trace_record(clock_, target, "preinstall",
                 json{{"layer", "flow"}, {"rule_id", rule.rule_id}});
  }

  void preinstall(const ElementId& target, const PhyRule& rule) {
    agent(target).phy_table.install_rule(rule);
    trace_record(clock_, target, "preinstall", json{{"layer", "phy"}, {"rule_id", rule.rule_id}});
  }

  void add_reactive_rule(const ElementId& target, const FlowRule& rule) {
    reactive_rules_.push_back({target, rule});
  }

  void inject_packet(const ElementId& element, const Packet& packet, long at_tick) {
    if (!agents_.count(element)) throw model_error("unknown element " + element.str());
    if (at_tick < clock_) throw model_error("cannot inject in the past");
    if (packet.size_bytes <= 0) throw model_error("packet size must be positive");
    if (!seen_packet_ids_.insert(packet.packet_id).second) {
      throw model_error("duplicate packet id " + std::to_string(packet.packet_id));
    }
    enqueue(at_tick, sim_event::PacketArrival{element, packet, false});
  }

  void inject_qos_event(const QosEvent& event, long at_tick) {
    if (at_tick < clock_) throw model_error("cannot inject in the past");
    enqueue(at_tick, sim_event::QosArrival{event});
  }

  bool queue_empty() const { return queue_.empty(); }

  // Processes the minimal (at_tick, seq) event.
  void step() {
    if (queue_.empty()) throw model_error("step on empty queue");
    const SimEvent ev = *queue_.begin();
    queue_.erase(queue_.begin());
    clock_ = ev.at_tick;
    std::visit([&](const auto& payload) { handle(ev.at_tick, payload); }, ev.payload);
  }

  // Processes every event with at_tick < tick.
  void run_until(long tick) {
    while (!queue_.empty() && queue_.begin()->at_tick < tick) step();
  }

  // Runs until the queue drains. Status epochs reschedule themselves only
  // while other work is pending, so the queue always drains.
  void run_to_quiescence() {
    while (!queue_.empty()) step();
  }

  // Terminal packet outcomes, for conservation checks.
  const std::map<long, std::string>& packet_outcomes() const { return packet_outcomes_; }

 private:
  struct ReactiveRule {
    ElementId target;
    FlowRule rule;
  };

  template <typename PayloadT>
  void enqueue(long at_tick, PayloadT payload) {
    queue_.insert(SimEvent{at_tick, next_seq_++, std::move(payload)});
  }

  void trace_record(long tick, const ElementId& element, const std::string& event, json detail,
                    long packet_id = -1) {
    json j = json::object();
    j["tick"] = tick;
    j["seq"] = trace_seq_++;
    j["element"] = element.str();
    j["event"] = event;
    if (packet_id >= 0) j["packet_id"] = packet_id;
    if (!detail.is_null()) j["detail"] = std::move(detail);
    trace_.append(j);
  }

  void finish_packet(long tick, const ElementId& element, const Packet& p,
                     const std::string& outcome, json detail) {
    packet_outcomes_[p.packet_id] = outcome;
    trace_record(tick, element, outcome, std::move(detail), p.packet_id);
  }

  void handle(long tick, const sim_event::PacketArrival& ev) {
    SdnAgent& a = agent(ev.element);
    ++a.packets_since_epoch;
    a.tags_since_epoch.insert(ev.packet.header.service_tag);
    if (!ev.is_retry) {
      auto& visited = visited_[ev.packet.packet_id];
      if (!visited.insert(ev.element).second) {
        throw model_error("packet " + std::to_string(ev.packet.packet_id) +
                          " visited " + ev.element.str() + " twice");
      }
    }
    trace_record(tick, ev.element, "arrive",
                 ev.is_retry ? json{{"retry", true}} : json(), ev.packet.packet_id);

    const auto result = a.table.match(ev.packet.header);
    if (const auto* miss = std::get_if<Miss>(&result)) {
      if (miss->policy == MissPolicy::DropOnMiss) {
        finish_packet(tick, ev.element, ev.packet, "miss_drop", json());
      } else {
        packet_in(tick, ev.element, ev.packet, ev.is_retry);
      }
      return;
    }
    const auto& matched = std::get<Matched<FlowAction>>(result);
    for (const auto& action : matched.actions) {
      if (std::holds_alternative<flow_action::Drop>(action)) {
        finish_packet(tick, ev.element, ev.packet, "drop",
                      json{{"rule_id", matched.rule_id}});
        return;
      }
      if (std::holds_alternative<flow_action::ToController>(action)) {
        packet_in(tick, ev.element, ev.packet, ev.is_retry);
        return;
      }
      const auto& fwd = std::get<flow_action::Forward>(action);
      if (!fwd.unlimited()) {
        auto& window = a.rate_state[matched.rule_id];
        if (window.tick != tick) {
          window.tick = tick;
          window.bytes_used = 0.0;
        }
        const double budget = fwd.rate_limit_mbps * kBytesPerTickPerMbps;
        if (window.bytes_used + ev.packet.size_bytes > budget + 1e-9) {
          finish_packet(tick, ev.element, ev.packet, "rate_limited",
                        json{{"rule_id", matched.rule_id}});
          return;
        }
        window.bytes_used += ev.packet.size_bytes;
      }
      if (ev.element.kind == ElementKind::VROUTER) {
        finish_packet(tick, ev.element, ev.packet, "deliver",
                      json{{"rule_id", matched.rule_id}});
        return;
      }
      if (!agents_.count(fwd.dest)) {
        finish_packet(tick, ev.element, ev.packet, "drop",
                      json{{"note", "dest has no agent"}, {"rule_id", matched.rule_id}});
        return;
      }
      trace_record(tick, ev.element, "forward",
                   json{{"dest", fwd.dest.str()}, {"rule_id", matched.rule_id}},
                   ev.packet.packet_id);
      enqueue(tick + 1, sim_event::PacketArrival{fwd.dest, ev.packet, false});
      return;
    }
  }

  // Table miss (or explicit ToController): headers go to the controller,
  // matching reactive installs are delivered at tick+1, and the packet is
  // re-presented once at tick+2. A second miss retires it.
  void packet_in(long tick, const ElementId& element, const Packet& p, bool was_retry) {
    if (was_retry) {
      finish_packet(tick, element, p, "retired", json());
      return;
    }
    trace_record(tick, element, "packet_in", json{{"header", to_json(p.header)}}, p.packet_id);
    for (const auto& rr : reactive_rules_) {
      if (rr.target == element && rr.rule.match.matches(p.header)) {
        enqueue(tick + 1, sim_event::ControlDelivery{rr.target, rr.rule});
      }
    }
    enqueue(tick + 2, sim_event::PacketArrival{element, p, true});
  }

  void handle(long tick, const sim_event::StatusEpoch&) {
    int reports = 0;
    for (auto& [id, a] : agents_) {
      StatusReport r;
      r.element_id = id;
      r.timestamp = tick;
      r.load_pct = std::min<double>(100.0, static_cast<double>(a.packets_since_epoch));
      r.user_count = static_cast<int>(a.tags_since_epoch.size());
      db_.report_status(r);
      a.packets_since_epoch = 0;
      a.tags_since_epoch.clear();
      ++reports;
    }
    trace_record(tick, ElementId{ElementKind::CONTROLLER, 0}, "status_epoch",
                 json{{"reports", reports}});
    if (!queue_.empty() && epoch_ticks_ > 0) {
      enqueue(tick + epoch_ticks_, sim_event::StatusEpoch{});
    }
  }

  void handle(long tick, const sim_event::ControlDelivery& ev) {
    if (const auto* flow = std::get_if<FlowRule>(&ev.install)) {
      const Slice* slice = db_.slices().owner_of(flow->match);
      if (slice == nullptr) {
        trace_record(tick, ev.target, "install_rejected",
                     json{{"layer", "flow"},
                          {"reason", "no slice admits the rule's match"},
                          {"rule_id", flow->rule_id}});
        return;
      }
      const AdmitResult admit = admit_rule(*slice, *flow);
      if (!admit.admitted) {
        trace_record(tick, ev.target, "install_rejected",
                     json{{"layer", "flow"}, {"reason", admit.reason},
                          {"rule_id", flow->rule_id}});
        return;
      }
      try {
        agent(ev.target).table.install_rule(*flow);
        trace_record(tick, ev.target, "install",
                     json{{"layer", "flow"}, {"rule_id", flow->rule_id},
                          {"slice", slice->slice_id}});
      } catch (const Error& e) {
        trace_record(tick, ev.target, "install_rejected",
                     json{{"layer", "flow"}, {"reason", e.what()}, {"rule_id", flow->rule_id}});
      }
      return;
    }
    const auto& phy = std::get<PhyRule>(ev.install);
    try {
      agent(ev.target).phy_table.install_rule(phy);
      json detail = json{{"layer", "phy"}, {"rule_id", phy.rule_id}};
      json actions = json::array();
      for (const auto& a : phy.actions) actions.push_back(to_json(a));
      detail["actions"] = actions;
      trace_record(tick, ev.target, "install", detail);
    } catch (const Error& e) {
      trace_record(tick, ev.target, "install_rejected",
                   json{{"layer", "phy"}, {"reason", e.what()}, {"rule_id", phy.rule_id}});
    }
  }

  void handle(long tick, const sim_event::QosArrival& ev) {
    trace_record(tick, ev.event.serving_cell, "qos_event", to_json(ev.event));
    const JointDecision decision = joint_optimize(db_, ev.event, thresholds_);
    trace_record(tick, ElementId{ElementKind::CONTROLLER, 0}, "decision",
                 json{{"user_id", ev.event.user_id}, {"decision", to_json(decision)}});
    for (const auto& [target, rule] : decision.flow_installs) {
      enqueue(tick + 1, sim_event::ControlDelivery{target, rule});
    }
    for (const auto& [target, rule] : decision.phy_installs) {
      enqueue(tick + 1, sim_event::ControlDelivery{target, rule});
    }
  }

  GlobalViewDB db_;
  Thresholds thresholds_;
  std::uint64_t seed_;
  long epoch_ticks_;
  std::map<ElementId, SdnAgent> agents_;
  std::set<SimEvent> queue_;
  long next_seq_ = 0;
  long trace_seq_ = 0;
  long clock_ = 0;
  EventLog trace_;
  std::vector<ReactiveRule> reactive_rules_;
  std::set<long> seen_packet_ids_;
  std::map<long, std::set<ElementId>> visited_;
  std::map<long, std::string> packet_outcomes_;
};

}  // namespace xl5g
