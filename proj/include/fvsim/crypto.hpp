#pragma once

#include <cstdint>
#include <optional>

#include "fvsim/bytes.hpp"

// Thin wrappers over OpenSSL primitives. Nothing here is novel; the simulator
// only needs HMAC-SHA-256, PBKDF2, AES key wrap, AES-GCM and AES-XTS.
namespace fvsim::crypto {

Digest sha256(ByteView data);

Digest hmac_sha256(ByteView key, ByteView data);

// Constant-time equality for equal-length buffers; false on length mismatch.
bool equal(ByteView a, ByteView b);

Key32 pbkdf2_sha256(ByteView password, ByteView salt, std::uint32_t iterations);

// RFC 3394 AES-256 key wrap. unwrap returns nullopt when the integrity check fails.
Bytes aes_kw_wrap(const Key32& kek, ByteView key_data);
std::optional<Bytes> aes_kw_unwrap(const Key32& kek, ByteView wrapped);

// AES-256-GCM with a 12-byte nonce; the 16-byte tag is appended to the ciphertext.
Bytes aes_gcm_seal(const Key32& key, ByteView nonce12, ByteView aad, ByteView plaintext);
std::optional<Bytes> aes_gcm_open(const Key32& key, ByteView nonce12, ByteView aad,
                                  ByteView sealed);

inline constexpr std::size_t kSectorSize = 512;

// Per-sector AES-256-XTS. The 32-byte data key comes straight from the DEK; the
// tweak key is derived from it, and the tweak is the little-endian sector index.
class SectorCipher {
 public:
  explicit SectorCipher(const Key32& dek);
  ~SectorCipher();
  SectorCipher(const SectorCipher&) = delete;
  SectorCipher& operator=(const SectorCipher&) = delete;
  SectorCipher(SectorCipher&& other) noexcept;
  SectorCipher& operator=(SectorCipher&& other) noexcept;

  // in and out must both be a whole number of sectors; they may alias.
  void encrypt(std::uint64_t first_sector, ByteView in, std::span<std::uint8_t> out) const;
  void decrypt(std::uint64_t first_sector, ByteView in, std::span<std::uint8_t> out) const;

 private:
  void run(bool encrypt, std::uint64_t first_sector, ByteView in,
           std::span<std::uint8_t> out) const;

  std::array<std::uint8_t, 64> xts_key_{};
  void* ctx_ = nullptr;  // EVP_CIPHER_CTX
};

}  // namespace fvsim::crypto
