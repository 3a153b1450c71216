#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "xl5g/ids.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

struct ResourceRequest {
  int cpu_units = 0;
  int storage_units = 0;
};

struct ResourceAllocation {
  int allocation_id = 0;
  ElementId processor_id;
  int cpu_units = 0;
  int storage_units = 0;
};

struct InsufficientResources : Error {
  explicit InsufficientResources(const std::string& msg) : Error("model", msg) {}
};

// Two-dimensional first-fit allocator over the processor inventory.
// Capacities are integers so the no-overcommit invariant needs no tolerance.
class ResourcePool {
 public:
  void add_processor(const ElementId& id, int cpu_units, int storage_units) {
    if (id.kind != ElementKind::PROCESSOR) throw model_error("pool accepts PROCESSOR ids only");
    if (cpu_units < 0 || storage_units < 0) throw model_error("negative capacity");
    if (procs_.count(id)) throw model_error("duplicate processor " + id.str());
    procs_[id] = State{cpu_units, storage_units, cpu_units, storage_units};
  }

  // First fit in processor id order.
  ResourceAllocation allocate(const ResourceRequest& request) {
    check_request(request);
    for (auto& [id, st] : procs_) {
      if (st.free_cpu >= request.cpu_units && st.free_storage >= request.storage_units) {
        st.free_cpu -= request.cpu_units;
        st.free_storage -= request.storage_units;
        ResourceAllocation a{next_allocation_id_++, id, request.cpu_units,
                             request.storage_units};
        live_[a.allocation_id] = a;
        return a;
      }
    }
    throw InsufficientResources("no processor fits request (" +
                                std::to_string(request.cpu_units) + " cpu, " +
                                std::to_string(request.storage_units) + " storage)");
  }

  void release(int allocation_id) {
    auto it = live_.find(allocation_id);
    if (it == live_.end()) {
      throw model_error("unknown allocation " + std::to_string(allocation_id));
    }
    State& st = procs_.at(it->second.processor_id);
    st.free_cpu += it->second.cpu_units;
    st.free_storage += it->second.storage_units;
    live_.erase(it);
  }

  // First-fit-decreasing, keyed on cpu (ties: storage desc, then input
  // order); all-or-nothing.
  std::vector<ResourceAllocation> place_batch(const std::vector<ResourceRequest>& requests) {
    std::vector<int> order(requests.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (requests[a].cpu_units != requests[b].cpu_units) {
        return requests[a].cpu_units > requests[b].cpu_units;
      }
      return requests[a].storage_units > requests[b].storage_units;
    });
    std::vector<ResourceAllocation> placed;
    std::vector<ResourceAllocation> by_input(requests.size());
    try {
      for (int idx : order) {
        placed.push_back(allocate(requests[idx]));
        by_input[idx] = placed.back();
      }
    } catch (const InsufficientResources&) {
      for (const auto& a : placed) release(a.allocation_id);
      throw InsufficientResources("batch of " + std::to_string(requests.size()) +
                                  " requests does not fit; rolled back");
    }
    return by_input;
  }

  int free_cpu(const ElementId& id) const { return state(id).free_cpu; }
  int free_storage(const ElementId& id) const { return state(id).free_storage; }
  int capacity_cpu(const ElementId& id) const { return state(id).cap_cpu; }
  int capacity_storage(const ElementId& id) const { return state(id).cap_storage; }

  const std::map<int, ResourceAllocation>& live_allocations() const { return live_; }

  std::vector<ElementId> processor_ids() const {
    std::vector<ElementId> out;
    for (const auto& [id, st] : procs_) out.push_back(id);
    return out;
  }

 private:
  struct State {
    int cap_cpu = 0;
    int cap_storage = 0;
    int free_cpu = 0;
    int free_storage = 0;
  };

  static void check_request(const ResourceRequest& r) {
    if (r.cpu_units <= 0 || r.storage_units <= 0) {
      throw model_error("resource request units must be positive");
    }
  }

  const State& state(const ElementId& id) const {
    auto it = procs_.find(id);
    if (it == procs_.end()) throw model_error("unknown processor " + id.str());
    return it->second;
  }

  std::map<ElementId, State> procs_;
  std::map<int, ResourceAllocation> live_;
  int next_allocation_id_ = 0;
};

}  // namespace xl5g
