#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "xl5g/flowspace.hpp"
#include "xl5g/netmodel.hpp"
#include "xl5g/resources.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

struct Slice {
  int slice_id = 0;
  FlowSpace space;
  ElementId controller_id;
  std::set<ElementId> element_ids;
};

struct OverlapWithExistingSlice : Error {
  explicit OverlapWithExistingSlice(int other)
      : Error("model", "flow space overlaps slice " + std::to_string(other)),
        other_slice_id(other) {}
  int other_slice_id;
};

// Slices are disjoint regions of flow space, each bound to one controller.
class SliceRegistry {
 public:
  const Slice& create_slice(int slice_id, FlowSpace space, const ElementId& controller_id) {
    if (space.regions.empty()) throw model_error("flow space must have at least one region");
    if (slices_.count(slice_id)) {
      throw model_error("duplicate slice id " + std::to_string(slice_id));
    }
    for (const auto& [other_id, other] : slices_) {
      if (flowspace_overlap(space, other.space)) throw OverlapWithExistingSlice(other_id);
    }
    Slice s{slice_id, std::move(space), controller_id, {}};
    return slices_.emplace(slice_id, std::move(s)).first->second;
  }

  const Slice* find(int slice_id) const {
    auto it = slices_.find(slice_id);
    return it == slices_.end() ? nullptr : &it->second;
  }

  void bind_element(int slice_id, const ElementId& element) {
    auto it = slices_.find(slice_id);
    if (it == slices_.end()) throw model_error("unknown slice " + std::to_string(slice_id));
    it->second.element_ids.insert(element);
  }

  const std::map<int, Slice>& slices() const { return slices_; }

  // The unique slice whose space contains the match, if any. Uniqueness
  // follows from pairwise disjointness.
  const Slice* owner_of(const FlowMatch& match) const {
    for (const auto& [id, s] : slices_) {
      if (flowspace_contains(s.space, match)) return &s;
    }
    return nullptr;
  }

 private:
  std::map<int, Slice> slices_;
};

// Admitted iff every packet the rule can match lies inside the slice's space,
// decided as field-wise containment in a single region. Rejection carries the
// reason; the caller leaves its tables unchanged.
inline AdmitResult admit_rule(const Slice& slice, const FlowRule& rule) {
  if (flowspace_contains(slice.space, rule.match)) return AdmitResult{true, ""};
  return AdmitResult{false, "rule " + std::to_string(rule.rule_id) +
                                " matches packets outside slice " +
                                std::to_string(slice.slice_id)};
}

// Creates a cloud-hosted virtual element: resources first, then topology
// registration, released again if registration fails.
inline VirtualElement create_virtual_element(ElementKind kind, std::optional<Protocol> protocol,
                                             const ResourceRequest& request, Topology& topology,
                                             ResourcePool& pool) {
  if (kind != ElementKind::VBBU && kind != ElementKind::VBSC && kind != ElementKind::VROUTER) {
    throw model_error("create_virtual_element handles VBBU/VBSC/VROUTER only");
  }
  const ResourceAllocation allocation = pool.allocate(request);
  VirtualElement element;
  element.id = ElementId{kind, topology.next_index(kind)};
  element.protocol = protocol;
  element.host = allocation.processor_id;
  element.allocation_id = allocation.allocation_id;
  try {
    topology.add_element(element);
  } catch (...) {
    pool.release(allocation.allocation_id);
    throw;
  }
  return element;
}

struct DuplicateProtocolOnPRRU : Error {
  DuplicateProtocolOnPRRU(const ElementId& prru, Protocol protocol)
      : Error("model", std::string("pRRU ") + prru.str() + " already hosts a " +
                           to_string(protocol) + " vRRU") {}
};

// Spectrum-level multiplexing: several vRRUs with different protocols share
// one pRRU; a second vRRU of the same protocol is refused.
inline VirtualElement attach_vrru(Topology& topology, const ElementId& prru_id,
                                  Protocol protocol) {
  const auto* prru = topology.find_as<PRRU>(prru_id);
  if (prru == nullptr) throw model_error("unknown pRRU " + prru_id.str());
  for (const auto& vid : prru->vrru_ids) {
    const auto* v = topology.find_as<VirtualElement>(vid);
    if (v && v->protocol == protocol) throw DuplicateProtocolOnPRRU(prru_id, protocol);
  }
  VirtualElement vrru;
  vrru.id = ElementId{ElementKind::VRRU, topology.next_index(ElementKind::VRRU)};
  vrru.protocol = protocol;
  vrru.host = prru_id;
  topology.add_element(vrru);
  PRRU updated = *prru;
  updated.vrru_ids.insert(vrru.id);
  topology.replace_element(updated);
  return vrru;
}

}  // namespace xl5g
