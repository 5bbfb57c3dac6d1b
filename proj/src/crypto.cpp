#include "fvsim/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace fvsim::crypto {

namespace {

constexpr std::string_view kTweakLabel = "fvsim/xts-tweak-key";

EVP_CIPHER_CTX* new_ctx() {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (ctx == nullptr) throw std::bad_alloc();
  return ctx;
}

struct CtxGuard {
  EVP_CIPHER_CTX* ctx;
  ~CtxGuard() { EVP_CIPHER_CTX_free(ctx); }
};

[[noreturn]] void openssl_failure(const char* what) {
  throw std::runtime_error(std::string("openssl: ") + what);
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  // HMAC() rejects a null key pointer even with zero length.
  static const std::uint8_t empty = 0;
  const std::uint8_t* k = key.empty() ? &empty : key.data();
  if (HMAC(EVP_sha256(), k, static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    openssl_failure("HMAC");
  }
  return out;
}

bool equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

Key32 pbkdf2_sha256(ByteView password, ByteView salt, std::uint32_t iterations) {
  Key32 out{};
  if (PKCS5_PBKDF2_HMAC(reinterpret_cast<const char*>(password.data()),
                        static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), static_cast<int>(iterations),
                        EVP_sha256(), static_cast<int>(out.size()), out.data()) != 1) {
    openssl_failure("PBKDF2");
  }
  return out;
}

Bytes aes_kw_wrap(const Key32& kek, ByteView key_data) {
  EVP_CIPHER_CTX* ctx = new_ctx();
  CtxGuard guard{ctx};
  EVP_CIPHER_CTX_set_flags(ctx, EVP_CIPHER_CTX_FLAG_WRAP_ALLOW);
  if (EVP_EncryptInit_ex(ctx, EVP_aes_256_wrap(), nullptr, kek.data(), nullptr) != 1) {
    openssl_failure("wrap init");
  }
  Bytes out(key_data.size() + 8);
  int len = 0;
  if (EVP_EncryptUpdate(ctx, out.data(), &len, key_data.data(),
                        static_cast<int>(key_data.size())) != 1) {
    openssl_failure("wrap");
  }
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::optional<Bytes> aes_kw_unwrap(const Key32& kek, ByteView wrapped) {
  if (wrapped.size() < 24 || wrapped.size() % 8 != 0) return std::nullopt;
  EVP_CIPHER_CTX* ctx = new_ctx();
  CtxGuard guard{ctx};
  EVP_CIPHER_CTX_set_flags(ctx, EVP_CIPHER_CTX_FLAG_WRAP_ALLOW);
  if (EVP_DecryptInit_ex(ctx, EVP_aes_256_wrap(), nullptr, kek.data(), nullptr) != 1) {
    openssl_failure("unwrap init");
  }
  Bytes out(wrapped.size());
  int len = 0;
  if (EVP_DecryptUpdate(ctx, out.data(), &len, wrapped.data(),
                        static_cast<int>(wrapped.size())) != 1 ||
      len <= 0) {
    return std::nullopt;
  }
  out.resize(static_cast<std::size_t>(len));
  return out;
}

Bytes aes_gcm_seal(const Key32& key, ByteView nonce12, ByteView aad, ByteView plaintext) {
  EVP_CIPHER_CTX* ctx = new_ctx();
  CtxGuard guard{ctx};
  if (EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce12.size()),
                          nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx, nullptr, nullptr, key.data(), nonce12.data()) != 1) {
    openssl_failure("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    openssl_failure("gcm aad");
  }
  Bytes out(plaintext.size() + 16);
  if (!plaintext.empty() && EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(),
                                              static_cast<int>(plaintext.size())) != 1) {
    openssl_failure("gcm encrypt");
  }
  int tail = 0;
  if (EVP_EncryptFinal_ex(ctx, out.data() + plaintext.size(), &tail) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, 16, out.data() + plaintext.size()) != 1) {
    openssl_failure("gcm final");
  }
  return out;
}

std::optional<Bytes> aes_gcm_open(const Key32& key, ByteView nonce12, ByteView aad,
                                  ByteView sealed) {
  if (sealed.size() < 16) return std::nullopt;
  const std::size_t body = sealed.size() - 16;
  EVP_CIPHER_CTX* ctx = new_ctx();
  CtxGuard guard{ctx};
  if (EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce12.size()),
                          nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx, nullptr, nullptr, key.data(), nonce12.data()) != 1) {
    openssl_failure("gcm init");
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    return std::nullopt;
  }
  Bytes out(body);
  if (body > 0 &&
      EVP_DecryptUpdate(ctx, out.data(), &len, sealed.data(), static_cast<int>(body)) != 1) {
    return std::nullopt;
  }
  Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(body), sealed.end());
  if (EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1) {
    return std::nullopt;
  }
  int tail = 0;
  if (EVP_DecryptFinal_ex(ctx, out.data() + body, &tail) != 1) return std::nullopt;
  return out;
}

SectorCipher::SectorCipher(const Key32& dek) {
  Digest tweak = hmac_sha256(dek, view(kTweakLabel));
  std::memcpy(xts_key_.data(), dek.data(), 32);
  std::memcpy(xts_key_.data() + 32, tweak.data(), 32);
  ctx_ = new_ctx();
}

SectorCipher::~SectorCipher() {
  OPENSSL_cleanse(xts_key_.data(), xts_key_.size());
  EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

SectorCipher::SectorCipher(SectorCipher&& other) noexcept
    : xts_key_(other.xts_key_), ctx_(other.ctx_) {
  other.ctx_ = nullptr;
}

SectorCipher& SectorCipher::operator=(SectorCipher&& other) noexcept {
  if (this != &other) {
    EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
    xts_key_ = other.xts_key_;
    ctx_ = other.ctx_;
    other.ctx_ = nullptr;
  }
  return *this;
}

void SectorCipher::encrypt(std::uint64_t first_sector, ByteView in,
                           std::span<std::uint8_t> out) const {
  run(true, first_sector, in, out);
}

void SectorCipher::decrypt(std::uint64_t first_sector, ByteView in,
                           std::span<std::uint8_t> out) const {
  run(false, first_sector, in, out);
}

void SectorCipher::run(bool encrypt, std::uint64_t first_sector, ByteView in,
                       std::span<std::uint8_t> out) const {
  if (in.size() != out.size() || in.size() % kSectorSize != 0) {
    throw std::invalid_argument("SectorCipher: buffers must be whole sectors of equal size");
  }
  auto* ctx = static_cast<EVP_CIPHER_CTX*>(ctx_);
  const std::size_t sectors = in.size() / kSectorSize;
  for (std::size_t s = 0; s < sectors; ++s) {
    std::array<std::uint8_t, 16> tweak{};
    const std::uint64_t index = first_sector + s;
    for (int i = 0; i < 8; ++i) tweak[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(index >> (8 * i));
    if (EVP_CipherInit_ex(ctx, EVP_aes_256_xts(), nullptr, xts_key_.data(), tweak.data(),
                          encrypt ? 1 : 0) != 1) {
      openssl_failure("xts init");
    }
    int len = 0;
    // XTS in OpenSSL processes one data unit per update call; in-place is supported.
    if (EVP_CipherUpdate(ctx, out.data() + s * kSectorSize, &len, in.data() + s * kSectorSize,
                         static_cast<int>(kSectorSize)) != 1) {
      openssl_failure("xts update");
    }
  }
}

}  // namespace fvsim::crypto
