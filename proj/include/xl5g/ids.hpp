#pragma once

#include <compare>
#include <string>

#include "xl5g/util.hpp"

namespace xl5g {

enum class ElementKind { PRRU, VRRU, VBBU, VBSC, VROUTER, PROCESSOR, CONTROLLER };

inline const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::PRRU: return "PRRU";
    case ElementKind::VRRU: return "VRRU";
    case ElementKind::VBBU: return "VBBU";
    case ElementKind::VBSC: return "VBSC";
    case ElementKind::VROUTER: return "VROUTER";
    case ElementKind::PROCESSOR: return "PROCESSOR";
    case ElementKind::CONTROLLER: return "CONTROLLER";
  }
  return "?";
}

struct ElementId {
  ElementKind kind = ElementKind::PRRU;
  int index = 0;

  auto operator<=>(const ElementId&) const = default;

  std::string str() const { return std::string(to_string(kind)) + ":" + std::to_string(index); }
};

// Parses the "KIND:index" form produced by ElementId::str().
inline ElementId parse_element_id(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw config_error("bad element id '" + s + "'");
  const std::string kind_s = s.substr(0, colon);
  const std::string idx_s = s.substr(colon + 1);
  ElementKind kind;
  if (kind_s == "PRRU") kind = ElementKind::PRRU;
  else if (kind_s == "VRRU") kind = ElementKind::VRRU;
  else if (kind_s == "VBBU") kind = ElementKind::VBBU;
  else if (kind_s == "VBSC") kind = ElementKind::VBSC;
  else if (kind_s == "VROUTER") kind = ElementKind::VROUTER;
  else if (kind_s == "PROCESSOR") kind = ElementKind::PROCESSOR;
  else if (kind_s == "CONTROLLER") kind = ElementKind::CONTROLLER;
  else throw config_error("bad element kind '" + kind_s + "'");
  try {
    std::size_t pos = 0;
    const int idx = std::stoi(idx_s, &pos);
    if (pos != idx_s.size() || idx < 0) throw config_error("bad element index '" + idx_s + "'");
    return ElementId{kind, idx};
  } catch (const std::invalid_argument&) {
    throw config_error("bad element index '" + idx_s + "'");
  } catch (const std::out_of_range&) {
    throw config_error("bad element index '" + idx_s + "'");
  }
}

}  // namespace xl5g
