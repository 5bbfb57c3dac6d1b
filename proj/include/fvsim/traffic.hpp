#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fvsim/bytes.hpp"

namespace fvsim {

// Host = the eMMC package pins; Nand = the controller-to-die pads.
enum class BusSide : std::uint8_t { Host, Nand };

enum class BusOp : std::uint8_t {
  Read,
  Write,
  SetPassword,
  Unlock,
  RpmbRequest,
  RpmbResponse,
  PageRead,
  PageProgram,
  BlockErase,
  ChannelMessage,
};

std::string_view to_string(BusOp op);

struct BusTransaction {
  BusSide side;
  BusOp op;
  std::uint64_t address;
  Bytes payload;
};

// What a logic analyser on the bus would have captured, in order.
class TrafficLog {
 public:
  void record(BusSide side, BusOp op, std::uint64_t address, ByteView payload) {
    entries_.push_back({side, op, address, Bytes(payload.begin(), payload.end())});
  }

  const std::vector<BusTransaction>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  // True if any single transaction payload contains needle.
  bool contains(ByteView needle) const {
    for (const auto& t : entries_) {
      if (contains_subsequence(t.payload, needle)) return true;
    }
    return false;
  }

 private:
  std::vector<BusTransaction> entries_;
};

}  // namespace fvsim
