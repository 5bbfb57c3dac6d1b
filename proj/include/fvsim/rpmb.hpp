#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "fvsim/bytes.hpp"

namespace fvsim {

class EmmcDevice;

inline constexpr std::uint32_t kRpmbBlockSize = 256;

enum class RpmbRequest : std::uint8_t {
  ProgramKey = 0x01,
  ReadCounter = 0x02,
  AuthWrite = 0x03,
  AuthRead = 0x04,
};

// Responses carry the request code with this bit set.
inline constexpr std::uint8_t kRpmbResponseBit = 0x80;

enum class RpmbResult : std::uint8_t {
  Ok = 0,
  GeneralFailure = 1,
  MacMismatch = 2,
  CounterMismatch = 3,
  AddressOutOfRange = 4,
  WriteCounterExpired = 5,
  KeyNotProgrammed = 6,
  KeyAlreadyProgrammed = 7,
};

std::string_view to_string(RpmbResult r);

// One RPMB message. The MAC covers the canonical serialization:
//   type:u8 | address:u32 | counter:u32 | nonce[16] | payload_len:u32 | payload | result:u8
// and the wire form is canonical || mac[32].
//
// AuthRead requests carry the block count as a u32 payload.
struct RpmbFrame {
  std::uint8_t type = 0;
  std::uint32_t address = 0;
  std::uint32_t counter = 0;
  Nonce16 nonce{};
  Bytes payload;
  RpmbResult result = RpmbResult::Ok;
  Digest mac{};

  static constexpr std::size_t kFixedBytes = 1 + 4 + 4 + 16 + 4 + 1;

  bool is_response() const { return (type & kRpmbResponseBit) != 0; }
  RpmbRequest request() const { return static_cast<RpmbRequest>(type & ~kRpmbResponseBit); }

  Bytes canonical() const;
  Bytes to_wire() const;
  static std::optional<RpmbFrame> from_wire(ByteView wire);

  Digest compute_mac(const Key32& key) const;
  void sign(const Key32& key) { mac = compute_mac(key); }
  bool verify(const Key32& key) const;

  bool operator==(const RpmbFrame&) const = default;
};

enum class ResponseCheck { Ok, BadMac, StaleNonce, WrongType };

// Host-side RPMB driver: owns the authentication key, builds signed requests
// and checks device responses.
class RpmbHost {
 public:
  explicit RpmbHost(const Key32& key) : key_(key) {}

  const Key32& key() const { return key_; }

  RpmbFrame make_request(RpmbRequest type, std::uint32_t address, std::uint32_t counter,
                         const Nonce16& nonce, ByteView payload) const;

  // Throws KeyNotProgrammed.
  RpmbFrame read_counter(EmmcDevice& dev, const Nonce16& nonce) const;
  // Protocol failures come back in-band in the response's result field.
  RpmbFrame auth_write(EmmcDevice& dev, std::uint32_t counter, std::uint32_t address,
                       ByteView payload) const;
  // Throws KeyNotProgrammed / AddressOutOfRange.
  RpmbFrame auth_read(EmmcDevice& dev, const Nonce16& nonce, std::uint32_t address,
                      std::uint32_t count) const;

  ResponseCheck verify_response(const RpmbFrame& response, RpmbRequest expected,
                                const Nonce16* expected_nonce) const;

 private:
  Key32 key_;
};

}  // namespace fvsim
