#include <catch2/catch_amalgamated.hpp>

#include "xl5g/controlplane.hpp"

using namespace xl5g;

namespace {

// Three radio cells, two vBBUs, one slice owning service_tag 42.
GlobalViewDB make_db() {
  Topology t;
  t.add_element(PhysicalProcessor{{ElementKind::PROCESSOR, 0}, 32, 64});
  t.add_element(PRRU{{ElementKind::PRRU, 0}, {0.0, 0.0}, {}});
  for (int i = 0; i < 3; ++i) {
    VirtualElement cell{{ElementKind::VRRU, i}, Protocol::UMTS, {ElementKind::PRRU, 0},
                        {}, {}, {}};
    t.add_element(cell);
  }
  for (int i = 0; i < 2; ++i) {
    VirtualElement vbbu{{ElementKind::VBBU, i}, Protocol::UMTS, {ElementKind::PROCESSOR, 0},
                        {}, {}, {}};
    t.add_element(vbbu);
  }
  SliceRegistry slices;
  FlowMatch space;
  space.service_tag = WildcardField<std::uint16_t>::exact(42);
  slices.create_slice(1, FlowSpace{{space}}, {ElementKind::CONTROLLER, 0});
  slices.bind_element(1, {ElementKind::VBBU, 0});
  slices.bind_element(1, {ElementKind::VBBU, 1});
  return GlobalViewDB(std::move(t), std::move(slices), example_library());
}

StatusReport make_report(const ElementId& id, long t, double load, int users,
                         std::optional<bool> interference = std::nullopt) {
  StatusReport r;
  r.element_id = id;
  r.timestamp = t;
  r.load_pct = load;
  r.user_count = users;
  r.boundary_interference_flag = interference;
  return r;
}

}  // namespace

TEST_CASE("status reports update the latest slot") {
  GlobalViewDB db = make_db();
  const ElementId cell{ElementKind::VRRU, 0};
  CHECK(db.query_latest(cell) == nullptr);  // never reported

  CHECK(db.report_status(make_report(cell, 5, 10.0, 3)));
  const StatusReport* latest = db.query_latest(cell);
  REQUIRE(latest != nullptr);
  CHECK(latest->timestamp == 5);
  CHECK(latest->user_count == 3);

  CHECK_THROWS_AS(db.report_status(make_report({ElementKind::VBBU, 9}, 1, 0.0, 0)), Error);
  CHECK_THROWS_AS(db.query_latest({ElementKind::VBBU, 9}), Error);
}

TEST_CASE("timestamp regressions are rejected and counted") {
  GlobalViewDB db = make_db();
  const ElementId cell{ElementKind::VRRU, 0};
  CHECK(db.report_status(make_report(cell, 5, 10.0, 3)));
  CHECK_FALSE(db.report_status(make_report(cell, 3, 99.0, 9)));
  CHECK(db.regression_count() == 1);
  CHECK(db.query_latest(cell)->timestamp == 5);

  // Equal timestamps are non-decreasing, so accepted.
  CHECK(db.report_status(make_report(cell, 5, 20.0, 4)));
  CHECK(db.query_latest(cell)->load_pct == 20.0);
}

TEST_CASE("latest is the max-timestamp accepted report") {
  GlobalViewDB db = make_db();
  const ElementId cell{ElementKind::VRRU, 1};
  for (long t = 1; t <= 20; ++t) db.report_status(make_report(cell, t, double(t), 0));
  db.report_status(make_report(cell, 7, 777.0, 0));  // regression, dropped
  CHECK(db.query_latest(cell)->timestamp == 20);
}

TEST_CASE("history is bounded with oldest eviction") {
  GlobalViewDB db = make_db();
  const ElementId cell{ElementKind::VRRU, 0};
  for (long t = 1; t <= 100; ++t) db.report_status(make_report(cell, t, 0.0, 0));
  const auto* history = db.history(cell);
  REQUIRE(history != nullptr);
  CHECK(history->size() == GlobalViewDB::kHistoryBound);
  CHECK(history->front().timestamp == 100 - GlobalViewDB::kHistoryBound + 1);
  CHECK(history->back().timestamp == 100);
}

TEST_CASE("healthy user produces an empty decision") {
  GlobalViewDB db = make_db();
  QosEvent event{42, {ElementKind::VRRU, 0}, 0.9, false};
  const JointDecision d = joint_optimize(db, event);
  CHECK(d.empty());
}

TEST_CASE("all three clauses fire for a failing boundary user") {
  GlobalViewDB db = make_db();
  const ElementId serving{ElementKind::VRRU, 0};
  db.report_status(make_report(serving, 10, 50.0, 4, true));
  db.report_status(make_report({ElementKind::VRRU, 1}, 10, 30.0, 5));
  db.report_status(make_report({ElementKind::VRRU, 2}, 10, 30.0, 9));
  db.report_status(make_report({ElementKind::VBBU, 0}, 10, 60.0, 0));
  db.report_status(make_report({ElementKind::VBBU, 1}, 10, 20.0, 0));

  QosEvent event{42, serving, 0.1, true};
  const JointDecision d = joint_optimize(db, event);
  REQUIRE(d.phy_installs.size() == 2);
  REQUIRE(d.flow_installs.size() == 1);

  const auto& beam_rule = d.phy_installs[0].second;
  const auto* beam = std::get_if<phy_action::Beamform>(&beam_rule.actions[0]);
  REQUIRE(beam != nullptr);
  CHECK(beam->target_user == 42);
  CHECK(beam->gain == 0.5);
  CHECK(d.phy_installs[0].first == serving);

  // Strongest neighbor is VRRU:2 (9 users).
  const auto& cancel_rule = d.phy_installs[1].second;
  const auto* cancel = std::get_if<phy_action::CancelInterference>(&cancel_rule.actions[0]);
  REQUIRE(cancel != nullptr);
  CHECK(cancel->neighbor_cell == 2);

  // Least-loaded vBBU in the slice is VBBU:1 (20 < 60).
  const auto& fwd_rule = d.flow_installs[0].second;
  const auto* fwd = std::get_if<flow_action::Forward>(&fwd_rule.actions[0]);
  REQUIRE(fwd != nullptr);
  CHECK(fwd->dest == ElementId{ElementKind::VBBU, 1});
  REQUIRE(fwd_rule.match.service_tag.value.has_value());
  CHECK(*fwd_rule.match.service_tag.value == 42);
}

TEST_CASE("mid utility fires the reroute clause only") {
  GlobalViewDB db = make_db();
  QosEvent event{42, {ElementKind::VRRU, 0}, 0.4, false};
  const JointDecision d = joint_optimize(db, event);
  CHECK(d.phy_installs.empty());
  REQUIRE(d.flow_installs.size() == 1);
  // Neither vBBU has reported; both count as idle and the lowest id wins.
  const auto* fwd = std::get_if<flow_action::Forward>(&d.flow_installs[0].second.actions[0]);
  REQUIRE(fwd != nullptr);
  CHECK(fwd->dest == ElementId{ElementKind::VBBU, 0});
}

TEST_CASE("joint_optimize edge cases") {
  GlobalViewDB db = make_db();

  SECTION("unknown serving cell") {
    QosEvent event{42, {ElementKind::VRRU, 7}, 0.1, false};
    CHECK_THROWS_AS(joint_optimize(db, event), Error);
  }

  SECTION("boundary event without an interference flag adds no cancel rule") {
    const ElementId serving{ElementKind::VRRU, 0};
    db.report_status(make_report(serving, 1, 0.0, 0));  // flag absent
    QosEvent event{42, serving, 0.9, true};
    CHECK(joint_optimize(db, event).empty());
  }

  SECTION("no reported neighbor: cancel clause skipped") {
    const ElementId serving{ElementKind::VRRU, 0};
    db.report_status(make_report(serving, 1, 0.0, 0, true));
    QosEvent event{42, serving, 0.9, true};
    CHECK(joint_optimize(db, event).empty());
  }

  SECTION("neighbor tie resolves to the lowest id") {
    const ElementId serving{ElementKind::VRRU, 0};
    db.report_status(make_report(serving, 1, 0.0, 0, true));
    db.report_status(make_report({ElementKind::VRRU, 1}, 1, 0.0, 5));
    db.report_status(make_report({ElementKind::VRRU, 2}, 1, 0.0, 5));
    QosEvent event{42, serving, 0.9, true};
    const JointDecision d = joint_optimize(db, event);
    REQUIRE(d.phy_installs.size() == 1);
    const auto* cancel =
        std::get_if<phy_action::CancelInterference>(&d.phy_installs[0].second.actions[0]);
    REQUIRE(cancel != nullptr);
    CHECK(cancel->neighbor_cell == 1);
  }

  SECTION("user outside every slice: reroute clause skipped") {
    QosEvent event{7, {ElementKind::VRRU, 0}, 0.1, false};  // tag 7 unowned
    const JointDecision d = joint_optimize(db, event);
    CHECK(d.flow_installs.empty());
    CHECK(d.phy_installs.size() == 1);  // beamform still fires
  }
}

TEST_CASE("lowering utility never removes an install category") {
  GlobalViewDB db = make_db();
  const ElementId serving{ElementKind::VRRU, 0};
  db.report_status(make_report(serving, 1, 10.0, 2, true));
  db.report_status(make_report({ElementKind::VRRU, 1}, 1, 10.0, 3));

  auto category_mask = [&](double utility) {
    QosEvent event{42, serving, utility, true};
    const JointDecision d = joint_optimize(db, event);
    int mask = 0;
    for (const auto& [t, r] : d.phy_installs) {
      if (std::holds_alternative<phy_action::Beamform>(r.actions[0])) mask |= 1;
      if (std::holds_alternative<phy_action::CancelInterference>(r.actions[0])) mask |= 2;
    }
    if (!d.flow_installs.empty()) mask |= 4;
    return mask;
  };
  int prev = -1;
  for (double u = 1.0; u >= 0.0; u -= 0.05) {
    const int mask = category_mask(u);
    if (prev >= 0) CHECK((mask & prev) == prev);  // categories only accumulate
    prev = mask;
  }
}

TEST_CASE("joint_optimize is pure") {
  GlobalViewDB db = make_db();
  db.report_status(make_report({ElementKind::VRRU, 0}, 1, 10.0, 2, true));
  db.report_status(make_report({ElementKind::VRRU, 1}, 1, 10.0, 3));
  QosEvent event{42, {ElementKind::VRRU, 0}, 0.2, true};
  const auto d1 = to_json(joint_optimize(db, event)).dump();
  const auto d2 = to_json(joint_optimize(db, event)).dump();
  CHECK(d1 == d2);
}

TEST_CASE("push_decision delivers with slice admission") {
  GlobalViewDB db = make_db();
  FlowTable cell_table;
  PhyTable cell_phy;
  AgentHub agents;
  agents.flow_tables[{ElementKind::VRRU, 0}] = &cell_table;
  agents.phy_tables[{ElementKind::VRRU, 0}] = &cell_phy;

  SECTION("admitted flow rule reaches the table") {
    QosEvent event{42, {ElementKind::VRRU, 0}, 0.4, false};
    const JointDecision d = joint_optimize(db, event);
    EventLog log;
    const DeliveryReport report = push_decision(d, agents, db.slices(), &log);
    CHECK(report.accepted.size() == 1);
    CHECK(report.rejected.empty());
    CHECK(cell_table.size() == 1);
    REQUIRE(log.size() == 1);
    CHECK(log.lines()[0].find("push_decision") != std::string::npos);

    // Re-pushing the same decision collides on rule_id and is rejected.
    const DeliveryReport again = push_decision(d, agents, db.slices());
    CHECK(again.accepted.empty());
    REQUIRE(again.rejected.size() == 1);
    CHECK(cell_table.size() == 1);
  }

  SECTION("flow rule outside every slice is rejected") {
    JointDecision d;
    FlowRule wide;
    wide.rule_id = 1;
    wide.actions = {flow_action::Forward{{ElementKind::VBBU, 0}, 0.0}};
    d.flow_installs.emplace_back(ElementId{ElementKind::VRRU, 0}, wide);  // wildcard match
    const DeliveryReport report = push_decision(d, agents, db.slices());
    CHECK(report.accepted.empty());
    REQUIRE(report.rejected.size() == 1);
    CHECK(report.rejected[0].reason.find("slice") != std::string::npos);
    CHECK(cell_table.size() == 0);
  }

  SECTION("install targeting an element with no agent is rejected") {
    QosEvent event{42, {ElementKind::VRRU, 1}, 0.1, false};
    const JointDecision d = joint_optimize(db, event);  // targets VRRU:1
    const DeliveryReport report = push_decision(d, agents, db.slices());
    CHECK(report.accepted.empty());
    CHECK(report.rejected.size() == d.flow_installs.size() + d.phy_installs.size());
  }

  SECTION("empty decision yields an empty report") {
    const DeliveryReport report = push_decision(JointDecision{}, agents, db.slices());
    CHECK(report.accepted.empty());
    CHECK(report.rejected.empty());
  }

  SECTION("phy install lands in the phy table") {
    QosEvent event{42, {ElementKind::VRRU, 0}, 0.1, false};
    const JointDecision d = joint_optimize(db, event);
    REQUIRE(d.phy_installs.size() == 1);
    const DeliveryReport report = push_decision(d, agents, db.slices());
    CHECK(report.accepted.size() == 2);  // beamform + reroute
    CHECK(cell_phy.size() == 1);
  }
}

TEST_CASE("every install delivered by push_decision passes slice admission") {
  GlobalViewDB db = make_db();
  FlowTable table;
  AgentHub agents;
  agents.flow_tables[{ElementKind::VRRU, 0}] = &table;

  SmallRng rng(71);
  for (int t = 0; t < 200; ++t) {
    JointDecision d;
    FlowRule r;
    r.rule_id = t;
    if (rng.next_below(2)) {
      r.match.service_tag =
          WildcardField<std::uint16_t>::exact(static_cast<std::uint16_t>(rng.next_below(50)));
    }
    if (rng.next_below(2)) {
      r.match.dst_ip = PrefixField::prefix(static_cast<std::uint32_t>(rng.next()), 8);
    }
    r.actions = {flow_action::Forward{{ElementKind::VBBU, 0}, 0.0}};
    d.flow_installs.emplace_back(ElementId{ElementKind::VRRU, 0}, r);
    push_decision(d, agents, db.slices());
  }
  for (const auto& rule : table.rules()) {
    const Slice* owner = db.slices().owner_of(rule.match);
    REQUIRE(owner != nullptr);
    CHECK(admit_rule(*owner, rule).admitted);
  }
  CHECK(table.size() > 0);
}
