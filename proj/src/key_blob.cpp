#include "fvsim/key_blob.hpp"

#include <algorithm>

#include "fvsim/crypto.hpp"

namespace fvsim {

namespace {
constexpr std::string_view kVerifierLabel = "fvsim/keyblob-verifier";
constexpr std::string_view kWrapLabel = "fvsim/keyblob-wrap";
}  // namespace

Bytes KeyBlob::serialize() const {
  Bytes out;
  out.reserve(kSerializedSize);
  append(out, view("FVKB"));
  out.push_back(kVersion);
  append(out, salt);
  put_u32(out, kdf_iterations);
  append(out, wrapped_dek);
  append(out, verifier);
  return out;
}

std::optional<KeyBlob> KeyBlob::parse(ByteView bytes) {
  if (bytes.size() < kSerializedSize) return std::nullopt;
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "FVKB") || bytes[4] != kVersion) {
    return std::nullopt;
  }
  KeyBlob blob;
  std::copy_n(bytes.begin() + 5, 16, blob.salt.begin());
  blob.kdf_iterations = get_u32(bytes, 21);
  if (blob.kdf_iterations == 0) return std::nullopt;
  blob.wrapped_dek.assign(bytes.begin() + 25, bytes.begin() + 25 + kWrappedSize);
  std::copy_n(bytes.begin() + 25 + kWrappedSize, 32, blob.verifier.begin());
  return blob;
}

std::optional<std::size_t> KeyBlob::find(ByteView haystack) {
  static constexpr std::uint8_t kMagic[] = {'F', 'V', 'K', 'B'};
  auto it = haystack.begin();
  while (true) {
    it = std::search(it, haystack.end(), std::begin(kMagic), std::end(kMagic));
    if (it == haystack.end()) return std::nullopt;
    const auto offset = static_cast<std::size_t>(it - haystack.begin());
    if (parse(haystack.subspan(offset))) return offset;
    ++it;
  }
}

PasswordKeys derive_password_keys(ByteView password, const Salt16& salt, std::uint32_t iterations) {
  const Key32 kek = crypto::pbkdf2_sha256(password, salt, iterations);
  PasswordKeys keys;
  keys.verifier = crypto::hmac_sha256(kek, view(kVerifierLabel));
  keys.wrap_key = crypto::hmac_sha256(kek, view(kWrapLabel));
  return keys;
}

KeyBlob wrap_dek(ByteView password, const Key32& dek, const Salt16& salt, std::uint32_t iterations) {
  const PasswordKeys keys = derive_password_keys(password, salt, iterations);
  KeyBlob blob;
  blob.salt = salt;
  blob.kdf_iterations = iterations;
  blob.wrapped_dek = crypto::aes_kw_wrap(keys.wrap_key, dek);
  blob.verifier = keys.verifier;
  return blob;
}

bool password_matches(const KeyBlob& blob, ByteView password) {
  const PasswordKeys keys = derive_password_keys(password, blob.salt, blob.kdf_iterations);
  return crypto::equal(keys.verifier, blob.verifier);
}

std::optional<Key32> unwrap_dek(const KeyBlob& blob, ByteView password) {
  const PasswordKeys keys = derive_password_keys(password, blob.salt, blob.kdf_iterations);
  if (!crypto::equal(keys.verifier, blob.verifier)) return std::nullopt;
  auto raw = crypto::aes_kw_unwrap(keys.wrap_key, blob.wrapped_dek);
  if (!raw || raw->size() != 32) return std::nullopt;
  Key32 dek{};
  std::copy(raw->begin(), raw->end(), dek.begin());
  return dek;
}

}  // namespace fvsim
