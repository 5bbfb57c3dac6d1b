#pragma once

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "fvsim/attack.hpp"
#include "fvsim/drive.hpp"

namespace testsupport {

using fvsim::Bytes;

inline Bytes str(const std::string& s) { return Bytes(s.begin(), s.end()); }

inline std::array<std::uint8_t, 32> hmac(const std::uint8_t* key, std::size_t key_len,
                                         const std::string& msg) {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key, static_cast<int>(key_len),
       reinterpret_cast<const unsigned char*>(msg.data()), msg.size(), out.data(), &len);
  return out;
}

// Brute-force oracle built straight on OpenSSL: reads the blob fields by
// offset and accepts a candidate only when the AES key-wrap integrity check
// passes. It never looks at the stored verifier.
inline std::optional<Bytes> oracle_bruteforce(const Bytes& media, const std::vector<Bytes>& dict) {
  const char magic[] = "FVKB";
  auto it = std::search(media.begin(), media.end(), magic, magic + 4);
  if (it == media.end()) return std::nullopt;
  const std::size_t off = static_cast<std::size_t>(it - media.begin());
  if (media.size() < off + 97) return std::nullopt;
  const std::uint8_t* salt = media.data() + off + 5;
  std::uint32_t iters = 0;
  for (int i = 0; i < 4; ++i) iters |= static_cast<std::uint32_t>(media[off + 21 + i]) << (8 * i);
  const std::uint8_t* wrapped = media.data() + off + 25;

  for (const Bytes& pw : dict) {
    std::array<std::uint8_t, 32> kek{};
    PKCS5_PBKDF2_HMAC(reinterpret_cast<const char*>(pw.data()), static_cast<int>(pw.size()), salt,
                      16, static_cast<int>(iters), EVP_sha256(), 32, kek.data());
    const auto wrap_key = hmac(kek.data(), kek.size(), "fvsim/keyblob-wrap");
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    EVP_CIPHER_CTX_set_flags(ctx, EVP_CIPHER_CTX_FLAG_WRAP_ALLOW);
    std::array<std::uint8_t, 48> out{};
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_wrap(), nullptr, wrap_key.data(), nullptr) == 1 &&
              EVP_DecryptUpdate(ctx, out.data(), &len, wrapped, 40) == 1 && len == 32;
    EVP_CIPHER_CTX_free(ctx);
    if (ok) return pw;
  }
  return std::nullopt;
}

// Reference XTS sector encryption: key1 = dek, key2 = HMAC(dek, label),
// tweak = little-endian sector index.
inline Bytes oracle_xts_encrypt(const std::array<std::uint8_t, 32>& dek, std::uint64_t sector,
                                const Bytes& plain) {
  std::array<std::uint8_t, 64> key{};
  std::memcpy(key.data(), dek.data(), 32);
  const auto k2 = hmac(dek.data(), 32, "fvsim/xts-tweak-key");
  std::memcpy(key.data() + 32, k2.data(), 32);
  std::array<std::uint8_t, 16> iv{};
  for (int i = 0; i < 8; ++i) iv[i] = static_cast<std::uint8_t>(sector >> (8 * i));
  Bytes out(plain.size());
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  int len = 0;
  EVP_EncryptInit_ex(ctx, EVP_aes_256_xts(), nullptr, key.data(), iv.data());
  EVP_EncryptUpdate(ctx, out.data(), &len, plain.data(), static_cast<int>(plain.size()));
  EVP_CIPHER_CTX_free(ctx);
  return out;
}

inline fvsim::ProvisionOptions compact_options(std::uint64_t seed, std::uint32_t iters = 100) {
  fvsim::ProvisionOptions o;
  o.seed = seed;
  o.kdf_iterations = iters;
  o.media = fvsim::MediaConfig::compact();
  return o;
}

inline std::vector<Bytes> wrong_passwords(std::size_t n, const std::string& prefix = "nope-") {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(str(prefix + std::to_string(i)));
  return out;
}

// Dictionary of n distinct words; the true password goes at index `at` when at < n.
inline std::vector<Bytes> dictionary_with(const Bytes& password, std::size_t n, std::size_t at) {
  std::vector<Bytes> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i == at ? password : str("cand" + std::to_string(i * 7919 % 1000003)));
  }
  return out;
}

}  // namespace testsupport
