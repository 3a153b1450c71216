#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "xl5g/util.hpp"

namespace xl5g {

// A value/prefix-length pattern over an unsigned field of `width` bits.
// prefix_len 0 is the wildcard; prefix_len == width is an exact value.
struct PrefixField {
  std::uint32_t value = 0;
  unsigned prefix_len = 0;
  unsigned width = 32;

  static PrefixField any(unsigned width = 32) { return PrefixField{0, 0, width}; }

  static PrefixField prefix(std::uint32_t value, unsigned len, unsigned width = 32) {
    if (width == 0 || width > 32) throw model_error("prefix field width out of range");
    if (len > width) throw model_error("prefix length exceeds field width");
    PrefixField f{value, len, width};
    f.value &= f.mask();
    return f;
  }

  static PrefixField exact(std::uint32_t value, unsigned width = 32) {
    return prefix(value, width, width);
  }

  std::uint32_t mask() const {
    if (prefix_len == 0) return 0;
    return ~std::uint32_t{0} << (32 - prefix_len) >> (32 - width);
  }

  bool is_wildcard() const { return prefix_len == 0; }
  bool is_exact() const { return prefix_len == width; }

  bool matches(std::uint32_t v) const { return (v & mask()) == value; }
};

// Prefixes overlap iff one contains the other.
inline bool contains(const PrefixField& outer, const PrefixField& inner) {
  if (outer.prefix_len > inner.prefix_len) return false;
  return (inner.value & outer.mask()) == outer.value;
}

inline bool overlaps(const PrefixField& a, const PrefixField& b) {
  return contains(a, b) || contains(b, a);
}

// Exact-or-wildcard pattern over any equality-comparable value type.
template <typename T>
struct WildcardField {
  std::optional<T> value;  // nullopt = wildcard

  static WildcardField any() { return WildcardField{std::nullopt}; }
  static WildcardField exact(T v) { return WildcardField{v}; }

  bool is_wildcard() const { return !value.has_value(); }
  bool matches(const T& v) const { return !value || *value == v; }
};

template <typename T>
inline bool contains(const WildcardField<T>& outer, const WildcardField<T>& inner) {
  if (outer.is_wildcard()) return true;
  return !inner.is_wildcard() && *inner.value == *outer.value;
}

template <typename T>
inline bool overlaps(const WildcardField<T>& a, const WildcardField<T>& b) {
  return a.is_wildcard() || b.is_wildcard() || *a.value == *b.value;
}

// Concrete header values for the six flow-match dimensions.
struct PacketHeader {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t transport_proto = 0;
  std::uint16_t service_tag = 0;
};

struct FlowMatch {
  PrefixField src_ip = PrefixField::any();
  PrefixField dst_ip = PrefixField::any();
  WildcardField<std::uint16_t> src_port;
  WildcardField<std::uint16_t> dst_port;
  WildcardField<std::uint8_t> transport_proto;
  WildcardField<std::uint16_t> service_tag;

  bool matches(const PacketHeader& h) const {
    return src_ip.matches(h.src_ip) && dst_ip.matches(h.dst_ip) &&
           src_port.matches(h.src_port) && dst_port.matches(h.dst_port) &&
           transport_proto.matches(h.transport_proto) &&
           service_tag.matches(h.service_tag);
  }
};

inline bool contains(const FlowMatch& outer, const FlowMatch& inner) {
  return contains(outer.src_ip, inner.src_ip) && contains(outer.dst_ip, inner.dst_ip) &&
         contains(outer.src_port, inner.src_port) &&
         contains(outer.dst_port, inner.dst_port) &&
         contains(outer.transport_proto, inner.transport_proto) &&
         contains(outer.service_tag, inner.service_tag);
}

inline bool overlaps(const FlowMatch& a, const FlowMatch& b) {
  return overlaps(a.src_ip, b.src_ip) && overlaps(a.dst_ip, b.dst_ip) &&
         overlaps(a.src_port, b.src_port) && overlaps(a.dst_port, b.dst_port) &&
         overlaps(a.transport_proto, b.transport_proto) &&
         overlaps(a.service_tag, b.service_tag);
}

enum class EncodingMode { Convolutional, Turbo, Ldpc };
enum class Modulation { GMSK, QPSK, QAM16, QAM64 };

inline const char* to_string(EncodingMode m) {
  switch (m) {
    case EncodingMode::Convolutional: return "convolutional";
    case EncodingMode::Turbo: return "turbo";
    case EncodingMode::Ldpc: return "ldpc";
  }
  return "?";
}

inline const char* to_string(Modulation m) {
  switch (m) {
    case Modulation::GMSK: return "GMSK";
    case Modulation::QPSK: return "QPSK";
    case Modulation::QAM16: return "QAM16";
    case Modulation::QAM64: return "QAM64";
  }
  return "?";
}

// Concrete radio-context values for the five PHY dimensions.
struct PhyContext {
  EncodingMode encoding_mode = EncodingMode::Convolutional;
  Modulation modulation_type = Modulation::GMSK;
  std::uint16_t carrier_id = 0;
  std::uint16_t cell_id = 0;
  std::uint16_t user_group = 0;
};

struct PhyMatch {
  WildcardField<EncodingMode> encoding_mode;
  WildcardField<Modulation> modulation_type;
  WildcardField<std::uint16_t> carrier_id;
  WildcardField<std::uint16_t> cell_id;
  WildcardField<std::uint16_t> user_group;

  bool matches(const PhyContext& c) const {
    return encoding_mode.matches(c.encoding_mode) &&
           modulation_type.matches(c.modulation_type) &&
           carrier_id.matches(c.carrier_id) && cell_id.matches(c.cell_id) &&
           user_group.matches(c.user_group);
  }

  // A fully wildcard match is only meaningful as a table default rule.
  bool all_wildcard() const {
    return encoding_mode.is_wildcard() && modulation_type.is_wildcard() &&
           carrier_id.is_wildcard() && cell_id.is_wildcard() && user_group.is_wildcard();
  }
};

// Dotted-quad helpers for rule fixtures and trace output.
inline std::uint32_t ipv4_from_string(const std::string& s) {
  unsigned a = 0, b = 0, c = 0, d = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 ||
      a > 255 || b > 255 || c > 255 || d > 255) {
    throw config_error("bad IPv4 address '" + s + "'");
  }
  return (a << 24) | (b << 16) | (c << 8) | d;
}

inline std::string ipv4_to_string(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (v >> 24) & 255, (v >> 16) & 255,
                (v >> 8) & 255, v & 255);
  return buf;
}

}  // namespace xl5g
