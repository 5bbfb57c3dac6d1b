#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fvsim/bytes.hpp"
#include "fvsim/key_blob.hpp"
#include "fvsim/rng.hpp"

namespace fvsim {

enum class ChannelRole : std::uint8_t { Controller = 0, Element = 1 };

// Authenticated-encryption channel between the drive controller and the secure
// element. session_key = HMAC(pairing_secret, controller_nonce || se_nonce).
// Messages are seq:u64 || AES-256-GCM(payload), nonce bound to sender role and seq.
class SecureChannel {
 public:
  SecureChannel() = default;

  static SecureChannel derive(ChannelRole role, const Key32& pairing_secret,
                              const Nonce16& controller_nonce, const Nonce16& se_nonce);

  bool established() const { return established_; }
  const Key32& session_key() const { return session_key_; }

  // Both throw ChannelNotEstablished on a default-constructed channel.
  Bytes seal(ByteView plaintext);
  // nullopt if authentication fails or the message is a replay.
  std::optional<Bytes> open(ByteView message);

  // Every sealed message this end sent or accepted, in order.
  const std::vector<Bytes>& transcript() const { return transcript_; }

 private:
  ChannelRole role_ = ChannelRole::Controller;
  Key32 session_key_{};
  bool established_ = false;
  std::uint64_t send_seq_ = 0;
  std::uint64_t last_recv_seq_ = 0;
  std::vector<Bytes> transcript_;
};

struct SeStatus {
  std::uint32_t remaining = 0;
  bool destroyed = false;
  bool operator==(const SeStatus&) const = default;
};

struct SeConfig {
  std::uint32_t max_retries = 10;
  std::uint32_t kdf_iterations = 10000;
};

struct ReleaseResult {
  bool released = false;
  std::uint32_t remaining = 0;
  bool destroyed = false;
  Bytes sealed_dek;  // DEK sealed under the channel; empty unless released
};

// Everything the chip keeps in its internal EEPROM, for save/restore of a
// simulation session. None of this is ever part of a MediaImage.
struct SecureElementState {
  Key32 pairing_secret{};
  SeConfig config;
  bool provisioned = false;
  bool destroyed = false;
  std::uint32_t retry_counter = 0;
  KeyBlob blob;
  std::string rng_state;
};

// Atmel-class secure microcontroller holding the wrapped DEK and the retry
// counter internally.
class SecureElement {
 public:
  SecureElement(const Key32& pairing_secret, std::uint64_t seed, SeConfig config = {});
  explicit SecureElement(SecureElementState state);

  void provision(ByteView password, const Key32& dek);

  std::pair<Nonce16, SecureChannel> open_channel(const Nonce16& controller_nonce);

  // Verifies a plaintext password delivered inside the channel. Correct:
  // counter reset to max and the DEK sealed under the session. Wrong: counter
  // decremented; reaching zero destroys the key.
  ReleaseResult verify_and_release(SecureChannel& channel, ByteView password);

  // Bus-level entry point: sealed unlock request in, sealed verdict out.
  // Throws ChannelAuthFailed for messages not sealed under this session
  // (no attempt is counted).
  Bytes handle_request(SecureChannel& channel, ByteView sealed_request);

  SeStatus status() const;
  bool provisioned() const { return provisioned_; }
  void destroy();

  // Internal EEPROM view, for audits of zeroization.
  const KeyBlob& internal_blob() const { return blob_; }

  SecureElementState export_state() const;

 private:
  std::optional<Key32> check(ByteView password);

  Key32 pairing_secret_{};
  SeConfig config_;
  DeterministicRng rng_;
  bool provisioned_ = false;
  bool destroyed_ = false;
  std::uint32_t retry_counter_ = 0;
  KeyBlob blob_;
};

// Wire format of the controller <-> SE unlock exchange (inside the channel).
namespace se_wire {
Bytes unlock_request(ByteView password);

enum class Verdict : std::uint8_t { Released = 0, Rejected = 1, Destroyed = 2 };

struct Response {
  Verdict verdict = Verdict::Rejected;
  std::uint32_t remaining = 0;
  std::optional<Key32> dek;
};

Bytes encode_response(const Response& r);
std::optional<Response> decode_response(ByteView plaintext);
}  // namespace se_wire

}  // namespace fvsim
