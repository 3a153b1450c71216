#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xl5g/util.hpp"

namespace xl5g {

// Fixed linear pipeline taxonomy; out_stage must be strictly later than
// in_stage for every module.
enum class StageKind { SourceBits, CodedBits, InterleavedBits, Symbols, Waveform };

inline const char* to_string(StageKind s) {
  switch (s) {
    case StageKind::SourceBits: return "source_bits";
    case StageKind::CodedBits: return "coded_bits";
    case StageKind::InterleavedBits: return "interleaved_bits";
    case StageKind::Symbols: return "symbols";
    case StageKind::Waveform: return "waveform";
  }
  return "?";
}

inline std::optional<StageKind> parse_stage(const std::string& s) {
  if (s == "source_bits") return StageKind::SourceBits;
  if (s == "coded_bits") return StageKind::CodedBits;
  if (s == "interleaved_bits") return StageKind::InterleavedBits;
  if (s == "symbols") return StageKind::Symbols;
  if (s == "waveform") return StageKind::Waveform;
  return std::nullopt;
}

// Metadata only: modules describe composition, no signal processing happens.
struct WirelessModule {
  std::string name;
  StageKind in_stage = StageKind::SourceBits;
  StageKind out_stage = StageKind::CodedBits;
  std::map<std::string, std::string> params;
};

struct ProtocolChain {
  std::string protocol_name;
  std::vector<std::string> module_names;

  bool operator==(const ProtocolChain&) const = default;
};

struct ChainCheck {
  bool valid = true;
  int position = -1;  // index of the offending module when invalid
  std::string reason;
};

class ModuleLibrary {
 public:
  void register_module(WirelessModule module) {
    if (module.name.empty()) throw model_error("module name must be nonempty");
    if (static_cast<int>(module.out_stage) <= static_cast<int>(module.in_stage)) {
      throw model_error("module '" + module.name + "' has inverted stages");
    }
    if (modules_.count(module.name)) {
      throw model_error("duplicate module name '" + module.name + "'");
    }
    modules_.emplace(module.name, std::move(module));
  }

  const WirelessModule* find(const std::string& name) const {
    auto it = modules_.find(name);
    return it == modules_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, WirelessModule>& modules() const { return modules_; }

 private:
  std::map<std::string, WirelessModule> modules_;
};

// Valid iff every module exists, the chain starts at SourceBits, ends at
// Waveform, and stages are contiguous (in_stage == previous out_stage).
inline ChainCheck validate_chain(const ModuleLibrary& library, const ProtocolChain& chain) {
  if (chain.module_names.empty()) {
    return ChainCheck{false, -1, "chain is empty"};
  }
  StageKind expected = StageKind::SourceBits;
  for (int i = 0; i < static_cast<int>(chain.module_names.size()); ++i) {
    const auto* m = library.find(chain.module_names[i]);
    if (m == nullptr) {
      return ChainCheck{false, i, "unknown module '" + chain.module_names[i] + "'"};
    }
    if (m->in_stage != expected) {
      return ChainCheck{false, i,
                        "chain must " + std::string(i == 0 ? "start at " : "continue from ") +
                            to_string(expected) + ", module '" + m->name + "' starts at " +
                            to_string(m->in_stage)};
    }
    expected = m->out_stage;
  }
  if (expected != StageKind::Waveform) {
    return ChainCheck{false, static_cast<int>(chain.module_names.size()) - 1,
                      "chain must end at waveform"};
  }
  return ChainCheck{};
}

// Sets element.deployed_chain after validation; redeploy replaces. The
// element type only needs a `deployed_chain` optional<ProtocolChain> member,
// which keeps this header independent of the topology model.
template <typename ElementT>
void deploy_protocol(ElementT& vbbu, const ProtocolChain& chain, const ModuleLibrary& library) {
  const ChainCheck check = validate_chain(library, chain);
  if (!check.valid) {
    throw model_error("cannot deploy '" + chain.protocol_name + "': " + check.reason);
  }
  vbbu.deployed_chain = chain;
}

// The two chains shipped with the repo's default scenarios.
inline ModuleLibrary example_library() {
  ModuleLibrary lib;
  lib.register_module({"conv-coder", StageKind::SourceBits, StageKind::CodedBits,
                       {{"rate", "1/2"}}});
  lib.register_module({"turbo-coder", StageKind::SourceBits, StageKind::CodedBits,
                       {{"rate", "1/3"}}});
  lib.register_module({"block-interleaver", StageKind::CodedBits, StageKind::InterleavedBits, {}});
  lib.register_module({"gmsk-modulator", StageKind::InterleavedBits, StageKind::Symbols,
                       {{"modulation", "GMSK"}}});
  lib.register_module({"qpsk-modulator", StageKind::InterleavedBits, StageKind::Symbols,
                       {{"modulation", "QPSK"}}});
  lib.register_module({"pulse-shaper", StageKind::Symbols, StageKind::Waveform, {}});
  return lib;
}

inline ProtocolChain gsm_like_chain() {
  return ProtocolChain{"gsm-like",
                       {"conv-coder", "block-interleaver", "gmsk-modulator", "pulse-shaper"}};
}

inline ProtocolChain umts_like_chain() {
  return ProtocolChain{"umts-like",
                       {"turbo-coder", "block-interleaver", "qpsk-modulator", "pulse-shaper"}};
}

}  // namespace xl5g
