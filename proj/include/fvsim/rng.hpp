#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>

#include "fvsim/bytes.hpp"

namespace fvsim {

// Seedable byte source. Every random choice in a scenario flows through one of
// these so that provisioning and attack runs replay exactly.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed = 0) : engine_(seed) {}

  void fill(std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < out.size(); i += 8) {
      std::uint64_t word = engine_();
      for (std::size_t j = 0; j < 8 && i + j < out.size(); ++j) {
        out[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
      }
    }
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  std::uint64_t next_u64() { return engine_(); }

  // Derives an independent child stream; used to give each component its own seed.
  std::uint64_t fork_seed() { return engine_() ^ 0x9E3779B97F4A7C15ULL; }

  std::string save() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fvsim
