#include <gtest/gtest.h>

#include <random>

#include "fvsim/crypto.hpp"
#include "fvsim/key_blob.hpp"
#include "support.hpp"

using namespace fvsim;
using testsupport::str;

namespace {

std::string hex(ByteView b) { return to_hex(b); }

Key32 key_from_hex(const std::string& h) {
  const Bytes b = from_hex(h);
  Key32 k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

}  // namespace

// Published test vectors (FIPS 180-2, RFC 4231, RFC 7914 section 11, RFC 3394).
TEST(CryptoVectors, Sha256) {
  EXPECT_EQ(hex(crypto::sha256(str("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CryptoVectors, HmacSha256) {
  EXPECT_EQ(hex(crypto::hmac_sha256(str("Jefe"), str("what do ya want for nothing?"))),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(CryptoVectors, Pbkdf2Sha256) {
  EXPECT_EQ(hex(crypto::pbkdf2_sha256(str("password"), str("salt"), 1)),
            "120fb6cffcf8b32c43e7225256c4f837a86548c92ccc35480805987cb70be17b");
  EXPECT_EQ(hex(crypto::pbkdf2_sha256(str("password"), str("salt"), 2)),
            "ae4d0c95af6b46d32d0adff928f06dd02a303f8ef3c251dfd6e2d85a95474c43");
  EXPECT_EQ(hex(crypto::pbkdf2_sha256(str("password"), str("salt"), 4096)),
            "c5e478d59288c841aa530db6845c4c8d962893a001ce4e11a4963873aa98134a");
}

TEST(CryptoVectors, AesKeyWrap256) {
  const Key32 kek = key_from_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
  const Bytes data = from_hex("00112233445566778899aabbccddeeff000102030405060708090a0b0c0d0e0f");
  const Bytes wrapped = crypto::aes_kw_wrap(kek, data);
  EXPECT_EQ(hex(wrapped),
            "28c9f404c4b810f4cbccb35cfb87f8263f5786e2d80ed326cbc7f0e71a99f43bfb988b9b7a02dd21");
  EXPECT_EQ(crypto::aes_kw_unwrap(kek, wrapped), data);
  Bytes bad = wrapped;
  bad[3] ^= 1;
  EXPECT_FALSE(crypto::aes_kw_unwrap(kek, bad));
}

TEST(Crypto, GcmSealOpen) {
  const Key32 key = key_from_hex(std::string(64, 'a'));
  const Bytes nonce(12, 3);
  const Bytes sealed = crypto::aes_gcm_seal(key, nonce, str("aad"), str("payload"));
  EXPECT_EQ(crypto::aes_gcm_open(key, nonce, str("aad"), sealed), str("payload"));
  EXPECT_FALSE(crypto::aes_gcm_open(key, nonce, str("aaD"), sealed));
  Bytes bad = sealed;
  bad[0] ^= 1;
  EXPECT_FALSE(crypto::aes_gcm_open(key, nonce, str("aad"), bad));
}

TEST(SectorCipher, MatchesReferenceXts) {
  std::mt19937_64 rng(5);
  Key32 dek{};
  for (auto& b : dek) b = static_cast<std::uint8_t>(rng());
  const crypto::SectorCipher cipher(dek);
  for (std::uint64_t sector : {0ull, 1ull, 5ull, 4095ull, 0x1'0000'0001ull}) {
    Bytes plain(512);
    for (auto& b : plain) b = static_cast<std::uint8_t>(rng());
    Bytes ct(512);
    cipher.encrypt(sector, plain, ct);
    EXPECT_EQ(ct, testsupport::oracle_xts_encrypt(dek, sector, plain)) << sector;
  }
}

TEST(SectorCipher, MultiSectorBufferUsesConsecutiveTweaks) {
  Key32 dek{};
  dek.fill(0x42);
  const crypto::SectorCipher cipher(dek);
  Bytes plain(3 * 512, 0x99);
  Bytes ct(plain.size());
  cipher.encrypt(10, plain, ct);
  for (std::uint64_t i = 0; i < 3; ++i) {
    const Bytes one(plain.begin() + i * 512, plain.begin() + (i + 1) * 512);
    EXPECT_EQ(Bytes(ct.begin() + i * 512, ct.begin() + (i + 1) * 512),
              testsupport::oracle_xts_encrypt(dek, 10 + i, one));
  }
  Bytes back(ct.size());
  cipher.decrypt(10, ct, back);
  EXPECT_EQ(back, plain);
  Bytes in_place = ct;
  cipher.decrypt(10, in_place, in_place);
  EXPECT_EQ(in_place, plain);
}

TEST(CryptoProperty, ThousandSectorRoundTrips) {
  std::mt19937_64 rng(2024);
  Key32 dek{};
  for (auto& b : dek) b = static_cast<std::uint8_t>(rng());
  const crypto::SectorCipher cipher(dek);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t sector = rng() % 1'000'000;
    Bytes plain(512);
    for (auto& b : plain) b = static_cast<std::uint8_t>(rng());
    Bytes ct(512), back(512), other(512);
    cipher.encrypt(sector, plain, ct);
    cipher.decrypt(sector, ct, back);
    ASSERT_EQ(back, plain);
    ASSERT_NE(ct, plain);
    cipher.encrypt(sector + 1, plain, other);
    ASSERT_NE(ct, other);
  }
}

TEST(KeyBlob, WrapUnwrapAndVerifier) {
  Key32 dek{};
  dek.fill(0x17);
  Salt16 salt{};
  salt.fill(0x01);
  const KeyBlob blob = wrap_dek(str("hunter2"), dek, salt, 50);
  EXPECT_EQ(blob.wrapped_dek.size(), KeyBlob::kWrappedSize);
  EXPECT_EQ(unwrap_dek(blob, str("hunter2")), dek);
  EXPECT_FALSE(unwrap_dek(blob, str("hunter3")));
  EXPECT_TRUE(password_matches(blob, str("hunter2")));
  EXPECT_FALSE(password_matches(blob, str("")));

  const auto keys = derive_password_keys(str("hunter2"), salt, 50);
  EXPECT_EQ(keys.verifier, blob.verifier);
}

TEST(KeyBlob, SerializeParseFind) {
  Key32 dek{};
  Salt16 salt{};
  salt[0] = 9;
  const KeyBlob blob = wrap_dek(str("pw"), dek, salt, 7);
  const Bytes ser = blob.serialize();
  ASSERT_EQ(ser.size(), KeyBlob::kSerializedSize);
  EXPECT_EQ(KeyBlob::parse(ser), blob);

  Bytes haystack(3000, 0xFF);
  haystack[100] = 'F';  // a stray partial magic must not match
  haystack[101] = 'V';
  std::copy(ser.begin(), ser.end(), haystack.begin() + 1234);
  EXPECT_EQ(KeyBlob::find(haystack), 1234u);
  EXPECT_FALSE(KeyBlob::find(Bytes(3000, 0)));
  EXPECT_FALSE(KeyBlob::parse(Bytes(KeyBlob::kSerializedSize, 0)));
}

TEST(KeyBlob, OracleAgreesOnDirectBlob) {
  Key32 dek{};
  dek.fill(0xA5);
  Salt16 salt{};
  const KeyBlob blob = wrap_dek(str("needle"), dek, salt, 20);
  const auto dict = testsupport::dictionary_with(str("needle"), 50, 31);
  EXPECT_EQ(testsupport::oracle_bruteforce(blob.serialize(), dict), str("needle"));
  const auto miss = testsupport::dictionary_with(str("needle"), 50, 50);
  EXPECT_FALSE(testsupport::oracle_bruteforce(blob.serialize(), miss));
}
