#include "fvsim/rpmb.hpp"

#include "fvsim/crypto.hpp"
#include "fvsim/emmc.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

std::string_view to_string(RpmbResult r) {
  switch (r) {
    case RpmbResult::Ok: return "Ok";
    case RpmbResult::GeneralFailure: return "GeneralFailure";
    case RpmbResult::MacMismatch: return "MacMismatch";
    case RpmbResult::CounterMismatch: return "CounterMismatch";
    case RpmbResult::AddressOutOfRange: return "AddressOutOfRange";
    case RpmbResult::WriteCounterExpired: return "WriteCounterExpired";
    case RpmbResult::KeyNotProgrammed: return "KeyNotProgrammed";
    case RpmbResult::KeyAlreadyProgrammed: return "KeyAlreadyProgrammed";
  }
  return "Unknown";
}

Bytes RpmbFrame::canonical() const {
  Bytes out;
  out.reserve(kFixedBytes + payload.size());
  out.push_back(type);
  put_u32(out, address);
  put_u32(out, counter);
  append(out, nonce);
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  append(out, payload);
  out.push_back(static_cast<std::uint8_t>(result));
  return out;
}

Bytes RpmbFrame::to_wire() const {
  Bytes out = canonical();
  append(out, mac);
  return out;
}

std::optional<RpmbFrame> RpmbFrame::from_wire(ByteView wire) {
  if (wire.size() < kFixedBytes + 32) return std::nullopt;
  RpmbFrame f;
  f.type = wire[0];
  f.address = get_u32(wire, 1);
  f.counter = get_u32(wire, 5);
  std::copy_n(wire.begin() + 9, 16, f.nonce.begin());
  const std::uint32_t len = get_u32(wire, 25);
  if (wire.size() != kFixedBytes + len + 32) return std::nullopt;
  f.payload.assign(wire.begin() + 29, wire.begin() + 29 + len);
  const std::uint8_t result = wire[29 + len];
  if (result > static_cast<std::uint8_t>(RpmbResult::KeyAlreadyProgrammed)) return std::nullopt;
  f.result = static_cast<RpmbResult>(result);
  std::copy_n(wire.end() - 32, 32, f.mac.begin());
  return f;
}

Digest RpmbFrame::compute_mac(const Key32& key) const {
  return crypto::hmac_sha256(key, canonical());
}

bool RpmbFrame::verify(const Key32& key) const {
  return crypto::equal(compute_mac(key), mac);
}

RpmbFrame RpmbHost::make_request(RpmbRequest type, std::uint32_t address, std::uint32_t counter,
                                 const Nonce16& nonce, ByteView payload) const {
  RpmbFrame f;
  f.type = static_cast<std::uint8_t>(type);
  f.address = address;
  f.counter = counter;
  f.nonce = nonce;
  f.payload.assign(payload.begin(), payload.end());
  f.sign(key_);
  return f;
}

RpmbFrame RpmbHost::read_counter(EmmcDevice& dev, const Nonce16& nonce) const {
  RpmbFrame resp = dev.rpmb_request(make_request(RpmbRequest::ReadCounter, 0, 0, nonce, {}));
  if (resp.result == RpmbResult::KeyNotProgrammed) throw Error(Errc::KeyNotProgrammed);
  return resp;
}

RpmbFrame RpmbHost::auth_write(EmmcDevice& dev, std::uint32_t counter, std::uint32_t address,
                               ByteView payload) const {
  return dev.rpmb_request(make_request(RpmbRequest::AuthWrite, address, counter, Nonce16{}, payload));
}

RpmbFrame RpmbHost::auth_read(EmmcDevice& dev, const Nonce16& nonce, std::uint32_t address,
                              std::uint32_t count) const {
  Bytes count_field;
  put_u32(count_field, count);
  RpmbFrame resp =
      dev.rpmb_request(make_request(RpmbRequest::AuthRead, address, 0, nonce, count_field));
  if (resp.result == RpmbResult::KeyNotProgrammed) throw Error(Errc::KeyNotProgrammed);
  if (resp.result == RpmbResult::AddressOutOfRange) {
    throw Error(Errc::AddressOutOfRange, "RPMB address " + std::to_string(address));
  }
  return resp;
}

ResponseCheck RpmbHost::verify_response(const RpmbFrame& response, RpmbRequest expected,
                                        const Nonce16* expected_nonce) const {
  if (!response.verify(key_)) return ResponseCheck::BadMac;
  if (response.type != (static_cast<std::uint8_t>(expected) | kRpmbResponseBit)) {
    return ResponseCheck::WrongType;
  }
  if (expected_nonce != nullptr && response.nonce != *expected_nonce) {
    return ResponseCheck::StaleNonce;
  }
  return ResponseCheck::Ok;
}

}  // namespace fvsim
