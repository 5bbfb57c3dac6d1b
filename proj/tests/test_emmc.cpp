#include <gtest/gtest.h>

#include "fvsim/emmc.hpp"
#include "fvsim/error.hpp"
#include "fvsim/rpmb.hpp"
#include "rpmb_suite.hpp"
#include "support.hpp"

using namespace fvsim;
using testsupport::small_emmc;
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

Key32 test_key(std::uint8_t v) {
  Key32 k{};
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<std::uint8_t>(v + i);
  return k;
}

Bytes rpmb_block(std::uint8_t v) { return Bytes(kRpmbBlockSize, v); }

Nonce16 nonce(std::uint8_t v) {
  Nonce16 n{};
  n.fill(v);
  return n;
}

}  // namespace

TEST(Emmc, ReadWriteWithoutPassword) {
  EmmcDevice dev(small_emmc());
  dev.write(2, Bytes(512, 0x61));
  EXPECT_EQ(dev.read(2, 1), Bytes(512, 0x61));
  EXPECT_EQ(code_of([&] { dev.write(64, Bytes(512, 1)); }), Errc::OutOfRange);
}

TEST(Emmc, LockEngagesOnPowerCycle) {
  EmmcDevice dev(small_emmc());
  dev.write(0, Bytes(512, 0x10));
  dev.set_password(str("abc"));
  EXPECT_EQ(dev.read(0, 1), Bytes(512, 0x10));
  dev.power_cycle();
  EXPECT_TRUE(dev.locked());
  EXPECT_EQ(code_of([&] { (void)dev.read(0, 1); }), Errc::DeviceLocked);
  EXPECT_EQ(code_of([&] { dev.write(0, Bytes(512, 1)); }), Errc::DeviceLocked);
  EXPECT_EQ(code_of([&] { dev.unlock(str("abd")); }), Errc::WrongPassword);
  dev.unlock(str("abc"));
  EXPECT_EQ(dev.read(0, 1), Bytes(512, 0x10));
}

TEST(Emmc, SetPasswordRules) {
  EmmcDevice dev(small_emmc());
  EXPECT_EQ(code_of([&] { dev.set_password(Bytes(129, 'x')); }), Errc::PasswordTooLong);
  dev.set_password(str("one"));
  dev.power_cycle();
  EXPECT_EQ(code_of([&] { dev.set_password(str("two")); }), Errc::DeviceLocked);
}

TEST(Emmc, TapSeesUnlockPasswordAndWrites) {
  EmmcDevice dev(small_emmc());
  EXPECT_EQ(code_of([&] { (void)dev.bus_tap(); }), Errc::TapNotEnabled);
  dev.set_password(str("abc"));
  dev.power_cycle();
  dev.enable_tap();
  dev.unlock(str("abc"));
  EXPECT_TRUE(dev.bus_tap().contains(str("abc")));
  const Bytes known(512, 0x7E);
  dev.write(5, known);
  EXPECT_TRUE(dev.bus_tap().contains(known));
}

TEST(Rpmb, ProgramKeyIsOneTime) {
  EmmcDevice dev(small_emmc());
  const RpmbHost host(test_key(1));
  EXPECT_EQ(code_of([&] { (void)host.read_counter(dev, nonce(1)); }), Errc::KeyNotProgrammed);
  EXPECT_EQ(host.auth_write(dev, 0, 0, rpmb_block(1)).result, RpmbResult::KeyNotProgrammed);
  dev.rpmb_program_key(test_key(1));
  EXPECT_TRUE(dev.inspect_meta().key_programmed);
  EXPECT_EQ(code_of([&] { dev.rpmb_program_key(test_key(2)); }), Errc::KeyAlreadyProgrammed);
}

TEST(Rpmb, ReadCounterFreshAndMac) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(3));
  const RpmbHost host(test_key(3));
  const auto n = nonce(9);
  const RpmbFrame resp = host.read_counter(dev, n);
  EXPECT_EQ(resp.counter, 0u);
  EXPECT_EQ(resp.nonce, n);
  EXPECT_TRUE(resp.verify(test_key(3)));
  EXPECT_EQ(host.verify_response(resp, RpmbRequest::ReadCounter, &n), ResponseCheck::Ok);
}

TEST(Rpmb, CounterMatchesNumberOfWrites) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(4));
  const RpmbHost host(test_key(4));
  // Scripted sequence: three good writes, one stale, one with a foreign key.
  int accepted = 0;
  const RpmbHost stranger(test_key(5));
  for (int i = 0; i < 3; ++i) {
    if (host.auth_write(dev, static_cast<std::uint32_t>(i), 1, rpmb_block(1)).result == RpmbResult::Ok) ++accepted;
  }
  EXPECT_EQ(host.auth_write(dev, 1, 1, rpmb_block(2)).result, RpmbResult::CounterMismatch);
  EXPECT_EQ(stranger.auth_write(dev, 3, 1, rpmb_block(2)).result, RpmbResult::MacMismatch);
  EXPECT_EQ(accepted, 3);
  EXPECT_EQ(host.read_counter(dev, nonce(0)).counter, 3u);
}

TEST(Rpmb, WriteAndReplay) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(6));
  const RpmbHost host(test_key(6));
  const RpmbFrame req = host.make_request(RpmbRequest::AuthWrite, 0, 0, Nonce16{}, rpmb_block(0xAA));
  const auto first = RpmbFrame::from_wire(dev.rpmb_request_wire(req.to_wire()));
  ASSERT_TRUE(first);
  EXPECT_EQ(first->result, RpmbResult::Ok);
  EXPECT_EQ(first->counter, 1u);
  const auto again = RpmbFrame::from_wire(dev.rpmb_request_wire(req.to_wire()));
  EXPECT_EQ(again->result, RpmbResult::CounterMismatch);
  EXPECT_EQ(dev.inspect_meta().write_counter, 1u);
}

TEST(Rpmb, AuthReadReturnsDataAndDetectsTampering) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(7));
  const RpmbHost host(test_key(7));
  ASSERT_EQ(host.auth_write(dev, 0, 0, rpmb_block(0x3C)).result, RpmbResult::Ok);
  const auto n = nonce(0x11);
  RpmbFrame resp = host.auth_read(dev, n, 0, 1);
  EXPECT_EQ(resp.payload, rpmb_block(0x3C));
  EXPECT_EQ(host.verify_response(resp, RpmbRequest::AuthRead, &n), ResponseCheck::Ok);
  resp.payload[17] ^= 0x01;
  EXPECT_EQ(host.verify_response(resp, RpmbRequest::AuthRead, &n), ResponseCheck::BadMac);
  EXPECT_EQ(code_of([&] { (void)host.auth_read(dev, n, dev.config().rpmb_block_count(), 1); }),
            Errc::AddressOutOfRange);
}

// A man in the middle answers a fresh read with a recorded response.
TEST(Rpmb, ReplayedResponseFailsFreshness) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(8));
  const RpmbHost host(test_key(8));
  ASSERT_EQ(host.auth_write(dev, 0, 0, rpmb_block(1)).result, RpmbResult::Ok);
  const auto old_nonce = nonce(1);
  const RpmbFrame recorded = host.auth_read(dev, old_nonce, 0, 1);
  ASSERT_EQ(host.auth_write(dev, 1, 0, rpmb_block(2)).result, RpmbResult::Ok);

  const auto fresh_nonce = nonce(2);
  const RpmbFrame genuine = host.auth_read(dev, fresh_nonce, 0, 1);
  EXPECT_EQ(host.verify_response(genuine, RpmbRequest::AuthRead, &fresh_nonce), ResponseCheck::Ok);
  EXPECT_EQ(genuine.payload, rpmb_block(2));
  EXPECT_EQ(host.verify_response(recorded, RpmbRequest::AuthRead, &fresh_nonce),
            ResponseCheck::StaleNonce);
}

TEST(Rpmb, EverySingleByteCorruptionGivesMacMismatch) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(9));
  const RpmbHost host(test_key(9));
  const Bytes wire = host.make_request(RpmbRequest::AuthWrite, 2, 0, Nonce16{}, rpmb_block(0x44)).to_wire();
  for (std::size_t i = 0; i < wire.size(); ++i) {
    for (std::uint8_t mask : {0x01, 0x80, 0xFF}) {
      Bytes bad = wire;
      bad[i] ^= mask;
      const auto resp = RpmbFrame::from_wire(dev.rpmb_request_wire(bad));
      ASSERT_TRUE(resp);
      EXPECT_EQ(resp->result, RpmbResult::MacMismatch) << "byte " << i;
    }
  }
  EXPECT_EQ(dev.inspect_meta().write_counter, 0u);
}

TEST(Rpmb, FrameWireRoundTrip) {
  RpmbFrame f;
  f.type = static_cast<std::uint8_t>(RpmbRequest::AuthWrite);
  f.address = 0x01020304;
  f.counter = 77;
  f.nonce = nonce(5);
  f.payload = rpmb_block(0x12);
  f.sign(test_key(1));
  const Bytes wire = f.to_wire();
  EXPECT_EQ(wire.size(), RpmbFrame::kFixedBytes + kRpmbBlockSize + 32);
  EXPECT_EQ(RpmbFrame::from_wire(wire), f);
  EXPECT_FALSE(RpmbFrame::from_wire(Bytes(wire.begin(), wire.begin() + 20)));
}

TEST(RpmbProperty, RandomSequencesHoldInvariants) {
  const auto res = testsupport::run_rpmb_sequences(200, 99, false);
  EXPECT_EQ(res.violations(), 0u) << res.first_failure;
  EXPECT_GT(res.successful_writes, 100u);
  EXPECT_GT(res.replays, 20u);
  EXPECT_GT(res.corruptions, 20u);
}

TEST(EmmcDie, RoundTripAndRollback) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(10));
  const RpmbHost host(test_key(10));
  ASSERT_EQ(host.auth_write(dev, 0, 0, rpmb_block(1)).result, RpmbResult::Ok);
  const MediaImage die = dev.die_dump();
  EXPECT_EQ(die.provenance, Provenance::Die);
  dev.die_restore(die);
  EXPECT_EQ(dev.die_dump(), die);
  EXPECT_EQ(host.read_counter(dev, nonce(0)).counter, 1u);

  ASSERT_EQ(host.auth_write(dev, 1, 0, rpmb_block(2)).result, RpmbResult::Ok);
  ASSERT_EQ(host.auth_write(dev, 2, 0, rpmb_block(3)).result, RpmbResult::Ok);
  EXPECT_EQ(host.read_counter(dev, nonce(0)).counter, 3u);
  dev.die_restore(die);
  EXPECT_EQ(host.read_counter(dev, nonce(0)).counter, 1u);
  EXPECT_EQ(host.auth_read(dev, nonce(1), 0, 1).payload, rpmb_block(1));

  EmmcDevice other(testsupport::small_emmc());
  EmmcConfig bigger = small_emmc();
  bigger.user_blocks = 128;
  EmmcDevice mismatched(bigger);
  EXPECT_EQ(code_of([&] { mismatched.die_restore(die); }), Errc::GeometryMismatch);
}

TEST(EmmcDie, LockStateLivesOnDie) {
  EmmcDevice dev(small_emmc());
  const Bytes blank = dev.read(0, 1);
  const MediaImage before = dev.die_dump();
  dev.set_password(str("secret"));
  dev.power_cycle();
  EXPECT_TRUE(dev.locked());
  dev.die_restore(before);
  EXPECT_FALSE(dev.password_set());
  EXPECT_EQ(dev.read(0, 1), blank);
}

TEST(EmmcPackage, DumpNeverRevealsRpmbKeyOrPayload) {
  EmmcDevice dev(small_emmc());
  const Key32 key = test_key(0xC0);
  dev.rpmb_program_key(key);
  const RpmbHost host(key);
  Bytes marker(kRpmbBlockSize);
  for (std::size_t i = 0; i < marker.size(); ++i) marker[i] = static_cast<std::uint8_t>(i ^ 0x5A);
  ASSERT_EQ(host.auth_write(dev, 0, 0, marker).result, RpmbResult::Ok);

  const MediaImage pkg = dev.dump();
  EXPECT_EQ(pkg.provenance, Provenance::Package);
  EXPECT_EQ(pkg.data.size(), dev.user_capacity());
  EXPECT_FALSE(contains_subsequence(pkg.data, key));
  EXPECT_FALSE(contains_subsequence(pkg.data, marker));
  const MediaImage die = dev.die_dump();
  EXPECT_TRUE(contains_subsequence(die.data, key));
  EXPECT_TRUE(contains_subsequence(die.data, marker));
  EXPECT_NE(pkg, die);

  dev.set_password(str("pw"));
  dev.power_cycle();
  EXPECT_EQ(code_of([&] { (void)dev.dump(); }), Errc::DeviceLocked);
}

TEST(EmmcPackage, RestoreUserAreaLeavesRpmbAlone) {
  EmmcDevice dev(small_emmc());
  dev.rpmb_program_key(test_key(1));
  const RpmbHost host(test_key(1));
  const Bytes blank = dev.read(0, 1);
  const MediaImage pkg = dev.dump();
  ASSERT_EQ(host.auth_write(dev, 0, 0, rpmb_block(9)).result, RpmbResult::Ok);
  dev.write(0, Bytes(512, 0xEE));
  dev.restore(pkg);
  EXPECT_EQ(dev.read(0, 1), blank);
  EXPECT_EQ(host.read_counter(dev, nonce(0)).counter, 1u);
}
