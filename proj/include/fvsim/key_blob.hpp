#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "fvsim/bytes.hpp"

namespace fvsim {

using Salt16 = std::array<std::uint8_t, 16>;

// Password-wrapped data-encryption key.
//
//   kek       = PBKDF2-HMAC-SHA256(password, salt, kdf_iterations)
//   verifier  = HMAC(kek, "fvsim/keyblob-verifier")
//   wrapped   = AES-256-KW(HMAC(kek, "fvsim/keyblob-wrap"), dek)
//
// Serialized as "FVKB" | version:u8 | salt[16] | iterations:u32 | wrapped[40] | verifier[32].
struct KeyBlob {
  static constexpr std::size_t kWrappedSize = 40;
  static constexpr std::size_t kSerializedSize = 4 + 1 + 16 + 4 + kWrappedSize + 32;
  static constexpr std::uint8_t kVersion = 1;

  Salt16 salt{};
  std::uint32_t kdf_iterations = 0;
  Bytes wrapped_dek;
  Digest verifier{};

  Bytes serialize() const;
  static std::optional<KeyBlob> parse(ByteView bytes);
  // First offset in haystack where a well-formed blob starts.
  static std::optional<std::size_t> find(ByteView haystack);

  bool operator==(const KeyBlob&) const = default;
};

struct PasswordKeys {
  Key32 wrap_key{};
  Digest verifier{};
};

PasswordKeys derive_password_keys(ByteView password, const Salt16& salt, std::uint32_t iterations);

KeyBlob wrap_dek(ByteView password, const Key32& dek, const Salt16& salt, std::uint32_t iterations);

// One KDF evaluation plus a verifier comparison.
bool password_matches(const KeyBlob& blob, ByteView password);

// nullopt on wrong password.
std::optional<Key32> unwrap_dek(const KeyBlob& blob, ByteView password);

}  // namespace fvsim
