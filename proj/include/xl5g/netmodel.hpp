#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "xl5g/dataset.hpp"
#include "xl5g/geo.hpp"
#include "xl5g/ids.hpp"
#include "xl5g/protocol_lib.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

struct PhysicalProcessor {
  ElementId id;
  int cpu_units = 0;
  int storage_units = 0;
};

struct PRRU {
  ElementId id;
  PlanarPoint location;
  std::set<ElementId> vrru_ids;
};

struct VirtualElement {
  ElementId id;
  std::optional<Protocol> protocol;
  ElementId host;  // PROCESSOR for VBBU/VBSC/VROUTER, PRRU for VRRU
  std::optional<int> allocation_id;  // absent for VRRU
  std::optional<ProtocolChain> deployed_chain;  // VBBU only
  std::optional<int> slice_id;
};

using Element = std::variant<PhysicalProcessor, PRRU, VirtualElement>;

inline ElementId element_id(const Element& e) {
  return std::visit([](const auto& x) { return x.id; }, e);
}

struct Link {
  ElementId a;
  ElementId b;
  double capacity_mbps = 0.0;

  auto operator<=>(const Link&) const = default;
};

struct Violation {
  ElementId element;
  std::string rule;
};

namespace detail {

// Forwarding layer position, or -1 for non-forwarding kinds.
inline int forwarding_layer(ElementKind k) {
  switch (k) {
    case ElementKind::VRRU: return 0;
    case ElementKind::VBBU: return 1;
    case ElementKind::VBSC: return 2;
    case ElementKind::VROUTER: return 3;
    default: return -1;
  }
}

inline bool host_kind_ok(ElementKind element, ElementKind host) {
  if (element == ElementKind::VRRU) return host == ElementKind::PRRU;
  return host == ElementKind::PROCESSOR;
}

}  // namespace detail

// Value-semantics element store. Mutation is replace-by-id; the forwarding
// subgraph vRRU->vBBU->vBSC->vRouter is kept a strict one-layer-step pipeline,
// which makes cycles impossible by construction.
class Topology {
 public:
  const std::map<ElementId, Element>& elements() const { return elements_; }
  const std::vector<Link>& links() const { return links_; }

  bool has(const ElementId& id) const { return elements_.count(id) != 0; }

  const Element* find(const ElementId& id) const {
    auto it = elements_.find(id);
    return it == elements_.end() ? nullptr : &it->second;
  }

  template <typename T>
  const T* find_as(const ElementId& id) const {
    const Element* e = find(id);
    return e ? std::get_if<T>(e) : nullptr;
  }

  void add_element(Element element) {
    const ElementId id = element_id(element);
    if (has(id)) throw model_error("duplicate element id " + id.str());
    check_host(element);
    elements_.emplace(id, std::move(element));
  }

  // Keeps the id, swaps the record. Used to model mutation.
  void replace_element(Element element) {
    const ElementId id = element_id(element);
    auto it = elements_.find(id);
    if (it == elements_.end()) throw model_error("unknown element id " + id.str());
    check_host(element);
    it->second = std::move(element);
  }

  void remove_element(const ElementId& id) {
    auto it = elements_.find(id);
    if (it == elements_.end()) throw model_error("unknown element id " + id.str());
    elements_.erase(it);
    std::erase_if(links_, [&](const Link& l) { return l.a == id || l.b == id; });
  }

  void add_link(const ElementId& a, const ElementId& b, double capacity_mbps) {
    if (!has(a)) throw model_error("link endpoint " + a.str() + " does not exist");
    if (!has(b)) throw model_error("link endpoint " + b.str() + " does not exist");
    const int la = detail::forwarding_layer(a.kind);
    const int lb = detail::forwarding_layer(b.kind);
    if (la >= 0 && lb >= 0 && lb != la + 1) {
      throw model_error("link " + a.str() + "->" + b.str() +
                        " breaks the vRRU->vBBU->vBSC->vRouter pipeline (cycle or shortcut)");
    }
    const Link link{a, b, capacity_mbps};
    for (const auto& l : links_) {
      if (l.a == a && l.b == b) throw model_error("duplicate link " + a.str() + "->" + b.str());
    }
    links_.push_back(link);
  }

  // Outgoing forwarding neighbors of an element, id order.
  std::vector<ElementId> next_hops(const ElementId& from) const {
    std::vector<ElementId> out;
    for (const auto& l : links_) {
      if (l.a == from) out.push_back(l.b);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Smallest unused index for a kind; keeps generated ids deterministic.
  int next_index(ElementKind kind) const {
    int idx = 0;
    for (const auto& [id, e] : elements_) {
      if (id.kind == kind && id.index >= idx) idx = id.index + 1;
    }
    return idx;
  }

  // Structural invariant check; violations are data, not errors. Deployed
  // chains are re-validated when a library is supplied.
  std::vector<Violation> validate(const ModuleLibrary* library = nullptr) const {
    std::vector<Violation> out;
    for (const auto& [id, e] : elements_) {
      if (const auto* v = std::get_if<VirtualElement>(&e)) {
        const Element* host = find(v->host);
        if (host == nullptr) {
          out.push_back({id, "host " + v->host.str() + " does not exist"});
        } else if (!detail::host_kind_ok(id.kind, v->host.kind)) {
          out.push_back({id, "host " + v->host.str() + " has wrong kind"});
        }
        if (v->deployed_chain && library) {
          const ChainCheck check = validate_chain(*library, *v->deployed_chain);
          if (!check.valid) {
            out.push_back({id, "deployed chain invalid: " + check.reason});
          }
        }
      } else if (const auto* p = std::get_if<PRRU>(&e)) {
        std::map<Protocol, int> per_protocol;
        for (const auto& vid : p->vrru_ids) {
          const auto* v = find_as<VirtualElement>(vid);
          if (v == nullptr) {
            out.push_back({id, "attached vRRU " + vid.str() + " does not exist"});
            continue;
          }
          if (v->host != id) {
            out.push_back({id, "attached vRRU " + vid.str() + " is hosted elsewhere"});
          }
          if (v->protocol && ++per_protocol[*v->protocol] == 2) {
            out.push_back({id, std::string("two vRRUs with protocol ") +
                                   to_string(*v->protocol)});
          }
        }
      }
    }
    for (const auto& l : links_) {
      if (!has(l.a)) out.push_back({l.a, "link endpoint missing"});
      if (!has(l.b)) out.push_back({l.b, "link endpoint missing"});
    }
    return out;
  }

 private:
  void check_host(const Element& element) {
    if (const auto* v = std::get_if<VirtualElement>(&element)) {
      if (!has(v->host)) {
        throw model_error("host " + v->host.str() + " does not exist for " + v->id.str());
      }
      if (!detail::host_kind_ok(v->id.kind, v->host.kind)) {
        throw model_error("host " + v->host.str() + " has wrong kind for " + v->id.str());
      }
    }
  }

  std::map<ElementId, Element> elements_;
  std::vector<Link> links_;
};

}  // namespace xl5g
