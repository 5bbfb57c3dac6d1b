#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fvsim/error.hpp"
#include "fvsim/secure_element.hpp"
#include "support.hpp"

using namespace fvsim;
using testsupport::str;

namespace {

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fvsim::Error thrown";
  return Errc::Io;
}

Key32 filled_key(std::uint8_t v) {
  Key32 k{};
  k.fill(v);
  return k;
}

const Key32 kPairing = filled_key(0x50);
const Key32 kDek = filled_key(0xD0);

SecureElement provisioned_se() {
  SecureElement se(kPairing, 11, SeConfig{10, 50});
  se.provision(str("correct"), kDek);
  return se;
}

// Controller side of one unlock exchange over the channel.
std::optional<Key32> try_unlock(SecureElement& se, const std::string& pw) {
  Nonce16 cn{};
  cn.fill(0x01);
  auto [sn, se_side] = se.open_channel(cn);
  SecureChannel ctl = SecureChannel::derive(ChannelRole::Controller, kPairing, cn, sn);
  ReleaseResult r = se.verify_and_release(se_side, str(pw));
  if (!r.released) return std::nullopt;
  auto plain = ctl.open(r.sealed_dek);
  if (!plain || plain->size() != 32) return std::nullopt;
  Key32 k{};
  std::copy(plain->begin(), plain->end(), k.begin());
  return k;
}

}  // namespace

TEST(SecureElement, ProvisionRules) {
  SecureElement se(kPairing, 1, SeConfig{10, 50});
  EXPECT_FALSE(se.provisioned());
  se.provision(str("pw"), kDek);
  EXPECT_EQ(se.status(), (SeStatus{10, false}));
  EXPECT_EQ(code_of([&] { se.provision(str("pw"), kDek); }), Errc::AlreadyProvisioned);
  se.destroy();
  SecureElement other(kPairing, 2, SeConfig{10, 50});
  other.destroy();
  EXPECT_EQ(code_of([&] { other.provision(str("pw"), kDek); }), Errc::Destroyed);
}

TEST(SecureElement, CounterDiscipline) {
  SecureElement se = provisioned_se();
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(try_unlock(se, "wrong"));
  EXPECT_EQ(se.status(), (SeStatus{7, false}));
  for (int i = 0; i < 6; ++i) EXPECT_FALSE(try_unlock(se, "wrong"));
  EXPECT_EQ(se.status().remaining, 1u);
  EXPECT_EQ(try_unlock(se, "correct"), kDek);
  EXPECT_EQ(se.status(), (SeStatus{10, false}));
}

TEST(SecureElement, TenthWrongDestroys) {
  SecureElement se = provisioned_se();
  for (int i = 0; i < 9; ++i) EXPECT_FALSE(try_unlock(se, "wrong"));
  EXPECT_FALSE(se.status().destroyed);
  EXPECT_FALSE(try_unlock(se, "wrong"));
  EXPECT_EQ(se.status(), (SeStatus{0, true}));
  EXPECT_EQ(code_of([&] { (void)try_unlock(se, "correct"); }), Errc::Destroyed);
  const KeyBlob& b = se.internal_blob();
  EXPECT_EQ(b.wrapped_dek, Bytes(b.wrapped_dek.size(), 0));
  EXPECT_EQ(b.verifier, Digest{});
}

TEST(SecureElement, VerifyNeedsChannel) {
  SecureElement se = provisioned_se();
  SecureChannel none;
  EXPECT_EQ(code_of([&] { (void)se.verify_and_release(none, str("correct")); }),
            Errc::ChannelNotEstablished);
  EXPECT_EQ(se.status().remaining, 10u);
}

TEST(SecureChannel, BothEndsDeriveSameKey) {
  Nonce16 cn{}, sn{};
  cn.fill(1);
  sn.fill(2);
  auto a = SecureChannel::derive(ChannelRole::Controller, kPairing, cn, sn);
  auto b = SecureChannel::derive(ChannelRole::Element, kPairing, cn, sn);
  EXPECT_EQ(a.session_key(), b.session_key());
  const Bytes m = a.seal(str("hello"));
  EXPECT_EQ(b.open(m), str("hello"));
  EXPECT_FALSE(b.open(m));  // replay
}

TEST(SecureChannel, DistinctNonceSessionsHaveDistinctKeys) {
  std::set<Key32> keys;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    Nonce16 cn{}, sn{};
    for (auto& x : cn) x = static_cast<std::uint8_t>(rng());
    for (auto& x : sn) x = static_cast<std::uint8_t>(rng());
    keys.insert(SecureChannel::derive(ChannelRole::Controller, kPairing, cn, sn).session_key());
  }
  EXPECT_EQ(keys.size(), 500u);
}

TEST(SecureChannel, WrongPairingSecretFailsAuthentication) {
  SecureElement se = provisioned_se();
  Nonce16 cn{};
  auto [sn, se_side] = se.open_channel(cn);
  SecureChannel rogue = SecureChannel::derive(ChannelRole::Controller, filled_key(0x51), cn, sn);
  const Bytes req = rogue.seal(se_wire::unlock_request(str("correct")));
  EXPECT_EQ(code_of([&] { (void)se.handle_request(se_side, req); }), Errc::ChannelAuthFailed);
  EXPECT_EQ(se.status().remaining, 10u);
}

TEST(SecureChannel, BusRequestResponse) {
  SecureElement se = provisioned_se();
  Nonce16 cn{};
  cn.fill(7);
  auto [sn, se_side] = se.open_channel(cn);
  SecureChannel ctl = SecureChannel::derive(ChannelRole::Controller, kPairing, cn, sn);
  const Bytes req = ctl.seal(se_wire::unlock_request(str("correct")));
  EXPECT_FALSE(contains_subsequence(req, str("correct")));
  const Bytes resp = se.handle_request(se_side, req);
  EXPECT_FALSE(contains_subsequence(resp, kDek));
  const auto plain = ctl.open(resp);
  ASSERT_TRUE(plain);
  const auto decoded = se_wire::decode_response(*plain);
  ASSERT_TRUE(decoded);
  EXPECT_EQ(decoded->verdict, se_wire::Verdict::Released);
  EXPECT_EQ(decoded->dek, kDek);
}

TEST(SecureChannelProperty, SealedDekNeverEqualsRawDek) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    Key32 dek{};
    for (auto& x : dek) x = static_cast<std::uint8_t>(rng());
    SecureElement se(kPairing, rng(), SeConfig{10, 1});
    se.provision(str("p"), dek);
    Nonce16 cn{};
    for (auto& x : cn) x = static_cast<std::uint8_t>(rng());
    auto [sn, se_side] = se.open_channel(cn);
    const ReleaseResult r = se.verify_and_release(se_side, str("p"));
    ASSERT_TRUE(r.released);
    ASSERT_FALSE(contains_subsequence(r.sealed_dek, dek));
  }
}

TEST(SecureElement, StateExportRoundTrip) {
  SecureElement se = provisioned_se();
  EXPECT_FALSE(try_unlock(se, "wrong"));
  SecureElement copy(se.export_state());
  EXPECT_EQ(copy.status(), (SeStatus{9, false}));
  EXPECT_EQ(try_unlock(copy, "correct"), kDek);
}
