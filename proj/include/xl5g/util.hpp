#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace xl5g {

// Error with a short machine-parseable category code. The CLI maps the
// category to its exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline Error config_error(const std::string& msg) { return Error("config", msg); }
inline Error io_error(const std::string& msg) { return Error("io", msg); }
inline Error model_error(const std::string& msg) { return Error("model", msg); }

// splitmix64 finalizer. Drives every keyed-hash draw in the project so that
// results are reproducible across platforms and independent of call order.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Deterministic sequential generator for tests and scenario sampling.
class SmallRng {
 public:
  explicit SmallRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix64(state_++); }
  double next_unit() { return to_unit(next()); }
  // value in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

// Fixed-precision decimal formatting; keeps CSV output byte-stable.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace xl5g
