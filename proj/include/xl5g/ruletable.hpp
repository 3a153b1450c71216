#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "xl5g/ids.hpp"
#include "xl5g/match.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

enum class MissPolicy { DropOnMiss, ToControllerOnMiss };

inline const char* to_string(MissPolicy p) {
  return p == MissPolicy::DropOnMiss ? "drop" : "to_controller";
}

namespace flow_action {
struct Forward {
  ElementId dest;
  double rate_limit_mbps = 0.0;  // 0 = unlimited

  bool unlimited() const { return rate_limit_mbps <= 0.0; }
};
struct Drop {};
struct ToController {};
}  // namespace flow_action

using FlowAction =
    std::variant<flow_action::Forward, flow_action::Drop, flow_action::ToController>;

namespace phy_action {
struct SetPower {
  double dbm = 0.0;
};
struct Beamform {
  int target_user = 0;
  double gain = 0.0;  // in [0, 1]
};
struct CancelInterference {
  int neighbor_cell = 0;
};
struct SetModulation {
  Modulation modulation_type = Modulation::QPSK;
};
}  // namespace phy_action

using PhyAction = std::variant<phy_action::SetPower, phy_action::Beamform,
                               phy_action::CancelInterference, phy_action::SetModulation>;

struct FlowRule {
  using match_type = FlowMatch;
  using action_type = FlowAction;
  using key_type = PacketHeader;

  int rule_id = 0;
  int priority = 0;
  FlowMatch match;
  std::vector<FlowAction> actions;
  long packet_count = 0;
  long install_seq = -1;  // assigned by the table
};

struct PhyRule {
  using match_type = PhyMatch;
  using action_type = PhyAction;
  using key_type = PhyContext;

  int rule_id = 0;
  int priority = 0;
  PhyMatch match;
  std::vector<PhyAction> actions;
  long packet_count = 0;
  long install_seq = -1;
};

inline void check_rule_invariants(const FlowRule& r) {
  if (r.actions.empty()) throw model_error("rule actions must be nonempty");
  if (r.actions.size() > 1) {
    for (const auto& a : r.actions) {
      if (std::holds_alternative<flow_action::Drop>(a)) {
        throw model_error("Drop must be the sole action");
      }
    }
  }
  for (const auto& a : r.actions) {
    if (const auto* f = std::get_if<flow_action::Forward>(&a)) {
      if (f->rate_limit_mbps < 0.0) throw model_error("negative rate limit");
    }
  }
}

inline void check_rule_invariants(const PhyRule& r) {
  if (r.actions.empty()) throw model_error("rule actions must be nonempty");
  for (const auto& a : r.actions) {
    if (const auto* b = std::get_if<phy_action::Beamform>(&a)) {
      if (b->gain < 0.0 || b->gain > 1.0) throw model_error("beamform gain outside [0, 1]");
    }
  }
}

template <typename ActionT>
struct Matched {
  int rule_id = 0;
  std::vector<ActionT> actions;
};

struct Miss {
  MissPolicy policy = MissPolicy::DropOnMiss;
};

template <typename ActionT>
using MatchResult = std::variant<Matched<ActionT>, Miss>;

// Prioritized match-action table. Rules are kept sorted by (priority desc,
// install_seq asc) so the first covering rule in scan order is the winner;
// only that resolution order is contractual.
template <typename RuleT>
class RuleTable {
 public:
  using rule_type = RuleT;
  using action_type = typename RuleT::action_type;
  using key_type = typename RuleT::key_type;

  explicit RuleTable(MissPolicy miss_policy = MissPolicy::DropOnMiss)
      : miss_policy_(miss_policy) {}

  MissPolicy miss_policy() const { return miss_policy_; }
  void set_miss_policy(MissPolicy p) { miss_policy_ = p; }

  const std::vector<RuleT>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  long miss_count() const { return miss_count_; }

  void install_rule(RuleT rule) {
    check_rule_invariants(rule);
    for (const auto& r : rules_) {
      if (r.rule_id == rule.rule_id) {
        throw model_error("duplicate rule id " + std::to_string(rule.rule_id));
      }
    }
    rule.install_seq = next_seq_++;
    rule.packet_count = 0;
    auto pos = std::find_if(rules_.begin(), rules_.end(), [&](const RuleT& r) {
      return r.priority < rule.priority;
    });
    rules_.insert(pos, std::move(rule));
  }

  void remove_rule(int rule_id) {
    auto pos = std::find_if(rules_.begin(), rules_.end(),
                            [&](const RuleT& r) { return r.rule_id == rule_id; });
    if (pos == rules_.end()) {
      throw model_error("unknown rule id " + std::to_string(rule_id));
    }
    rules_.erase(pos);
  }

  const RuleT* find_rule(int rule_id) const {
    for (const auto& r : rules_) {
      if (r.rule_id == rule_id) return &r;
    }
    return nullptr;
  }

  // Highest priority wins; equal priority resolves to the earliest install.
  MatchResult<action_type> match(const key_type& key) {
    for (auto& r : rules_) {
      if (r.match.matches(key)) {
        ++r.packet_count;
        return Matched<action_type>{r.rule_id, r.actions};
      }
    }
    ++miss_count_;
    return Miss{miss_policy_};
  }

 private:
  MissPolicy miss_policy_;
  std::vector<RuleT> rules_;
  long next_seq_ = 0;
  long miss_count_ = 0;
};

using FlowTable = RuleTable<FlowRule>;
using PhyTable = RuleTable<PhyRule>;

inline MatchResult<FlowAction> match_flow(FlowTable& table, const PacketHeader& h) {
  return table.match(h);
}

inline MatchResult<PhyAction> match_phy(PhyTable& table, const PhyContext& c) {
  return table.match(c);
}

}  // namespace xl5g
