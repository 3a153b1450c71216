#pragma once

#include <string>
#include <vector>

#include "xl5g/match.hpp"
#include "xl5g/ruletable.hpp"
#include "xl5g/util.hpp"

namespace xl5g {

// A union of match patterns; regions within one space may overlap each other.
struct FlowSpace {
  std::vector<FlowMatch> regions;
};

// True iff some concrete packet header lies in both spaces. Computed
// region-pairwise and field-wise, which is exact because every region is a
// cross product of per-field sets.
inline bool flowspace_overlap(const FlowSpace& a, const FlowSpace& b) {
  for (const auto& ra : a.regions) {
    for (const auto& rb : b.regions) {
      if (overlaps(ra, rb)) return true;
    }
  }
  return false;
}

inline bool flowspace_contains(const FlowSpace& space, const FlowMatch& match) {
  for (const auto& region : space.regions) {
    if (contains(region, match)) return true;
  }
  return false;
}

struct AdmitResult {
  bool admitted = false;
  std::string reason;  // set when rejected
};

}  // namespace xl5g
