#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "xl5g/virtualization.hpp"

using namespace xl5g;

TEST_CASE("module registration enforces stage order and unique names") {
  ModuleLibrary lib;
  lib.register_module({"conv-coder", StageKind::SourceBits, StageKind::CodedBits, {}});
  CHECK(lib.find("conv-coder") != nullptr);
  CHECK(lib.find("nope") == nullptr);

  CHECK_THROWS_AS(
      lib.register_module({"bad", StageKind::Symbols, StageKind::CodedBits, {}}), Error);
  CHECK_THROWS_AS(
      lib.register_module({"conv-coder", StageKind::SourceBits, StageKind::CodedBits, {}}),
      Error);
  CHECK_THROWS_AS(lib.register_module({"", StageKind::SourceBits, StageKind::CodedBits, {}}),
                  Error);
}

TEST_CASE("chain validation") {
  const ModuleLibrary lib = example_library();

  SECTION("the shipped chains are valid") {
    CHECK(validate_chain(lib, gsm_like_chain()).valid);
    CHECK(validate_chain(lib, umts_like_chain()).valid);
  }

  SECTION("a chain starting mid-pipeline is invalid at position 0") {
    const ProtocolChain wrong{"x", {"gmsk-modulator", "conv-coder"}};
    const ChainCheck check = validate_chain(lib, wrong);
    CHECK_FALSE(check.valid);
    CHECK(check.position == 0);
  }

  SECTION("unknown module is reported with its position") {
    const ProtocolChain wrong{"x", {"conv-coder", "martian-interleaver"}};
    const ChainCheck check = validate_chain(lib, wrong);
    CHECK_FALSE(check.valid);
    CHECK(check.position == 1);
    CHECK(check.reason.find("unknown module") != std::string::npos);
  }

  SECTION("a chain that stops before waveform is invalid") {
    const ProtocolChain wrong{"x", {"conv-coder", "block-interleaver"}};
    const ChainCheck check = validate_chain(lib, wrong);
    CHECK_FALSE(check.valid);
  }

  SECTION("the empty chain is invalid") {
    CHECK_FALSE(validate_chain(lib, ProtocolChain{"x", {}}).valid);
  }

  SECTION("every non-identity permutation of a valid chain is invalid") {
    std::vector<std::string> names = gsm_like_chain().module_names;
    std::sort(names.begin(), names.end());
    int valid_count = 0;
    do {
      if (validate_chain(lib, ProtocolChain{"p", names}).valid) ++valid_count;
    } while (std::next_permutation(names.begin(), names.end()));
    CHECK(valid_count == 1);  // only the stage-contiguous order survives
  }
}

TEST_CASE("deploy_protocol sets and replaces the chain") {
  const ModuleLibrary lib = example_library();
  VirtualElement vbbu;
  vbbu.id = {ElementKind::VBBU, 0};

  deploy_protocol(vbbu, gsm_like_chain(), lib);
  REQUIRE(vbbu.deployed_chain.has_value());
  CHECK(vbbu.deployed_chain->protocol_name == "gsm-like");

  deploy_protocol(vbbu, umts_like_chain(), lib);
  CHECK(vbbu.deployed_chain->protocol_name == "umts-like");

  CHECK_THROWS_AS(deploy_protocol(vbbu, ProtocolChain{"broken", {"pulse-shaper"}}, lib), Error);
  CHECK(vbbu.deployed_chain->protocol_name == "umts-like");  // unchanged on failure

  // The deployed chain still validates against the library snapshot.
  CHECK(validate_chain(lib, *vbbu.deployed_chain).valid);
}

// ---- flow-space isolation ----

namespace {

// Toy header domain, small enough to enumerate exhaustively: 4-bit addresses,
// two ports, two transport protocols, four service tags.
std::vector<PacketHeader> toy_headers() {
  std::vector<PacketHeader> out;
  for (std::uint32_t si = 0; si < 16; ++si)
    for (std::uint32_t di = 0; di < 16; ++di)
      for (std::uint16_t sp = 0; sp < 2; ++sp)
        for (std::uint16_t dp = 0; dp < 2; ++dp)
          for (int pr = 0; pr < 2; ++pr)
            for (std::uint16_t tag = 0; tag < 4; ++tag) {
              out.push_back(PacketHeader{si, di, sp, dp,
                                         static_cast<std::uint8_t>(pr == 0 ? 6 : 17), tag});
            }
  return out;
}

bool in_space(const FlowSpace& space, const PacketHeader& h) {
  for (const auto& r : space.regions) {
    if (r.matches(h)) return true;
  }
  return false;
}

FlowMatch random_toy_match(SmallRng& rng, bool pin_tag = false) {
  FlowMatch m;
  m.src_ip = PrefixField::prefix(static_cast<std::uint32_t>(rng.next_below(16)),
                                 static_cast<unsigned>(rng.next_below(3)) * 2, 4);
  m.dst_ip = PrefixField::prefix(static_cast<std::uint32_t>(rng.next_below(16)),
                                 static_cast<unsigned>(rng.next_below(3)) * 2, 4);
  if (rng.next_below(2)) m.src_port = WildcardField<std::uint16_t>::exact(rng.next_below(2));
  if (rng.next_below(2)) m.dst_port = WildcardField<std::uint16_t>::exact(rng.next_below(2));
  if (rng.next_below(2)) {
    m.transport_proto = WildcardField<std::uint8_t>::exact(rng.next_below(2) ? 6 : 17);
  }
  if (pin_tag || rng.next_below(2)) {
    m.service_tag = WildcardField<std::uint16_t>::exact(rng.next_below(4));
  }
  return m;
}

}  // namespace

TEST_CASE("flowspace overlap on disjoint and nested prefixes") {
  FlowMatch a, b, c;
  a.dst_ip = PrefixField::prefix(ipv4_from_string("10.1.0.0"), 16);
  b.dst_ip = PrefixField::prefix(ipv4_from_string("10.2.0.0"), 16);
  c.dst_ip = PrefixField::prefix(ipv4_from_string("10.1.2.0"), 24);
  CHECK_FALSE(flowspace_overlap(FlowSpace{{a}}, FlowSpace{{b}}));
  CHECK(flowspace_overlap(FlowSpace{{a}}, FlowSpace{{c}}));
  CHECK(flowspace_overlap(FlowSpace{{a, b}}, FlowSpace{{c}}));
}

TEST_CASE("flowspace overlap equals exhaustive enumeration on the toy domain") {
  const auto headers = toy_headers();
  SmallRng rng(17);
  for (int t = 0; t < 120; ++t) {
    FlowSpace a, b;
    const int na = 1 + static_cast<int>(rng.next_below(2));
    const int nb = 1 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < na; ++i) a.regions.push_back(random_toy_match(rng));
    for (int i = 0; i < nb; ++i) b.regions.push_back(random_toy_match(rng));
    bool truth = false;
    for (const auto& h : headers) {
      if (in_space(a, h) && in_space(b, h)) {
        truth = true;
        break;
      }
    }
    CHECK(flowspace_overlap(a, b) == truth);
  }
}

TEST_CASE("flowspace containment is exact on single-region spaces") {
  const auto headers = toy_headers();
  SmallRng rng(23);
  int contained = 0;
  for (int t = 0; t < 150; ++t) {
    const FlowSpace space{{random_toy_match(rng)}};
    const FlowMatch rule = random_toy_match(rng);
    bool truth = true;
    for (const auto& h : headers) {
      if (rule.matches(h) && !in_space(space, h)) {
        truth = false;
        break;
      }
    }
    CHECK(flowspace_contains(space, rule) == truth);
    if (truth) ++contained;
  }
  CHECK(contained > 0);
}

TEST_CASE("flowspace containment is sound on multi-region spaces") {
  // Containment is decided region-wise, so a positive answer always implies
  // set inclusion; the converse may fail only when a match straddles regions.
  const auto headers = toy_headers();
  SmallRng rng(29);
  for (int t = 0; t < 80; ++t) {
    FlowSpace space;
    const int n = 2 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < n; ++i) space.regions.push_back(random_toy_match(rng));
    const FlowMatch rule = random_toy_match(rng);
    if (!flowspace_contains(space, rule)) continue;
    for (const auto& h : headers) {
      if (rule.matches(h)) REQUIRE(in_space(space, h));
    }
  }
}

TEST_CASE("slice creation enforces disjointness") {
  SliceRegistry registry;
  const ElementId ctl{ElementKind::CONTROLLER, 0};

  FlowMatch tag1;
  tag1.service_tag = WildcardField<std::uint16_t>::exact(1);
  registry.create_slice(1, FlowSpace{{tag1}}, ctl);
  CHECK(registry.find(1) != nullptr);

  FlowMatch tag1_again;
  tag1_again.service_tag = WildcardField<std::uint16_t>::exact(1);
  try {
    registry.create_slice(9, FlowSpace{{tag1_again}}, ctl);
    FAIL("expected overlap rejection");
  } catch (const OverlapWithExistingSlice& e) {
    CHECK(e.other_slice_id == 1);
  }

  FlowMatch tag2;
  tag2.service_tag = WildcardField<std::uint16_t>::exact(2);
  registry.create_slice(2, FlowSpace{{tag2}}, ctl);
  CHECK(registry.slices().size() == 2);

  CHECK_THROWS_AS(registry.create_slice(2, FlowSpace{{tag2}}, ctl), Error);  // duplicate id
  CHECK_THROWS_AS(registry.create_slice(3, FlowSpace{}, ctl), Error);        // empty space
}

TEST_CASE("pairwise disjointness survives any creation sequence") {
  SmallRng rng(31);
  SliceRegistry registry;
  const ElementId ctl{ElementKind::CONTROLLER, 0};
  int created = 0;
  for (int t = 0; t < 60; ++t) {
    FlowSpace space;
    const int n = 1 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < n; ++i) space.regions.push_back(random_toy_match(rng));
    try {
      registry.create_slice(t, std::move(space), ctl);
      ++created;
    } catch (const Error&) {
    }
  }
  CHECK(created >= 2);
  for (const auto& [ia, a] : registry.slices()) {
    for (const auto& [ib, b] : registry.slices()) {
      if (ia < ib) CHECK_FALSE(flowspace_overlap(a.space, b.space));
    }
  }
}

TEST_CASE("rule admission by containment") {
  SliceRegistry registry;
  FlowMatch space_match;
  space_match.dst_ip = PrefixField::prefix(ipv4_from_string("10.1.0.0"), 16);
  const Slice& slice =
      registry.create_slice(1, FlowSpace{{space_match}}, {ElementKind::CONTROLLER, 0});

  FlowRule inside;
  inside.rule_id = 1;
  inside.match.dst_ip = PrefixField::prefix(ipv4_from_string("10.1.2.0"), 24);
  inside.actions = {flow_action::Drop{}};
  CHECK(admit_rule(slice, inside).admitted);

  FlowRule outside;
  outside.rule_id = 2;
  outside.match.dst_ip = PrefixField::prefix(ipv4_from_string("10.0.0.0"), 8);
  outside.actions = {flow_action::Drop{}};
  const AdmitResult r = admit_rule(slice, outside);
  CHECK_FALSE(r.admitted);
  CHECK_FALSE(r.reason.empty());
}

TEST_CASE("owner_of finds the unique owning slice") {
  SliceRegistry registry;
  const ElementId ctl{ElementKind::CONTROLLER, 0};
  for (int tag = 1; tag <= 3; ++tag) {
    FlowMatch m;
    m.service_tag = WildcardField<std::uint16_t>::exact(static_cast<std::uint16_t>(tag));
    registry.create_slice(tag, FlowSpace{{m}}, ctl);
  }
  FlowMatch probe;
  probe.service_tag = WildcardField<std::uint16_t>::exact(2);
  const Slice* owner = registry.owner_of(probe);
  REQUIRE(owner != nullptr);
  CHECK(owner->slice_id == 2);

  FlowMatch unowned;
  unowned.service_tag = WildcardField<std::uint16_t>::exact(9);
  CHECK(registry.owner_of(unowned) == nullptr);

  FlowMatch wildcard_tag;  // spans several slices, owned by none
  CHECK(registry.owner_of(wildcard_tag) == nullptr);
}

TEST_CASE("bind_element requires an existing slice") {
  SliceRegistry registry;
  FlowMatch m;
  m.service_tag = WildcardField<std::uint16_t>::exact(1);
  registry.create_slice(1, FlowSpace{{m}}, {ElementKind::CONTROLLER, 0});
  registry.bind_element(1, {ElementKind::VBBU, 0});
  CHECK(registry.find(1)->element_ids.count({ElementKind::VBBU, 0}) == 1);
  CHECK_THROWS_AS(registry.bind_element(7, {ElementKind::VBBU, 0}), Error);
}

// ---- cloud-level element creation ----

TEST_CASE("create_virtual_element allocates then registers") {
  Topology topology;
  ResourcePool pool;
  const ElementId p0{ElementKind::PROCESSOR, 0};
  topology.add_element(PhysicalProcessor{p0, 16, 32});
  pool.add_processor(p0, 16, 32);

  const VirtualElement vbbu = create_virtual_element(
      ElementKind::VBBU, Protocol::UMTS, ResourceRequest{4, 8}, topology, pool);
  CHECK(vbbu.id == ElementId{ElementKind::VBBU, 0});
  CHECK(vbbu.host == p0);
  CHECK(topology.has(vbbu.id));
  CHECK(pool.free_cpu(p0) == 12);
  CHECK(pool.free_storage(p0) == 24);

  // Three more exactly fill the processor.
  for (int i = 0; i < 3; ++i) {
    create_virtual_element(ElementKind::VBSC, std::nullopt, ResourceRequest{4, 8}, topology,
                           pool);
  }
  CHECK(pool.free_cpu(p0) == 0);
  CHECK(pool.free_storage(p0) == 0);

  CHECK_THROWS_AS(create_virtual_element(ElementKind::VROUTER, std::nullopt,
                                         ResourceRequest{1, 1}, topology, pool),
                  InsufficientResources);
  CHECK_THROWS_AS(create_virtual_element(ElementKind::VRRU, Protocol::GSM,
                                         ResourceRequest{1, 1}, topology, pool),
                  Error);
  CHECK(topology.validate().empty());
}

TEST_CASE("attach_vrru multiplexes protocols onto one pRRU") {
  Topology topology;
  const ElementId prru{ElementKind::PRRU, 0};
  topology.add_element(PRRU{prru, {100.0, 100.0}, {}});

  const VirtualElement umts = attach_vrru(topology, prru, Protocol::UMTS);
  const VirtualElement wlan = attach_vrru(topology, prru, Protocol::WLAN);
  CHECK(umts.id == ElementId{ElementKind::VRRU, 0});
  CHECK(wlan.id == ElementId{ElementKind::VRRU, 1});
  const auto* stored = topology.find_as<PRRU>(prru);
  REQUIRE(stored != nullptr);
  CHECK(stored->vrru_ids.size() == 2);

  CHECK_THROWS_AS(attach_vrru(topology, prru, Protocol::UMTS), DuplicateProtocolOnPRRU);
  CHECK_THROWS_AS(attach_vrru(topology, {ElementKind::PRRU, 5}, Protocol::GSM), Error);
  CHECK(topology.validate().empty());
}
