#include "fvsim/secure_element.hpp"

#include <algorithm>

#include "fvsim/crypto.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {

std::array<std::uint8_t, 12> channel_nonce(ChannelRole sender, std::uint64_t seq) {
  std::array<std::uint8_t, 12> n{};
  n[0] = static_cast<std::uint8_t>(sender);
  for (int i = 0; i < 8; ++i) n[4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seq >> (8 * i));
  return n;
}

ChannelRole peer(ChannelRole r) {
  return r == ChannelRole::Controller ? ChannelRole::Element : ChannelRole::Controller;
}

}  // namespace

SecureChannel SecureChannel::derive(ChannelRole role, const Key32& pairing_secret,
                                    const Nonce16& controller_nonce, const Nonce16& se_nonce) {
  Bytes material;
  append(material, controller_nonce);
  append(material, se_nonce);
  SecureChannel ch;
  ch.role_ = role;
  ch.session_key_ = crypto::hmac_sha256(pairing_secret, material);
  ch.established_ = true;
  return ch;
}

Bytes SecureChannel::seal(ByteView plaintext) {
  if (!established_) throw Error(Errc::ChannelNotEstablished);
  const std::uint64_t seq = ++send_seq_;
  Bytes msg;
  put_u64(msg, seq);
  const auto nonce = channel_nonce(role_, seq);
  append(msg, crypto::aes_gcm_seal(session_key_, nonce, ByteView(msg).first(8), plaintext));
  transcript_.push_back(msg);
  return msg;
}

std::optional<Bytes> SecureChannel::open(ByteView message) {
  if (!established_) throw Error(Errc::ChannelNotEstablished);
  if (message.size() < 8 + 16) return std::nullopt;
  const std::uint64_t seq = get_u64(message, 0);
  if (seq <= last_recv_seq_) return std::nullopt;
  const auto nonce = channel_nonce(peer(role_), seq);
  auto plain = crypto::aes_gcm_open(session_key_, nonce, message.first(8), message.subspan(8));
  if (!plain) return std::nullopt;
  last_recv_seq_ = seq;
  transcript_.emplace_back(message.begin(), message.end());
  return plain;
}

SecureElement::SecureElement(const Key32& pairing_secret, std::uint64_t seed, SeConfig config)
    : pairing_secret_(pairing_secret), config_(config), rng_(seed) {}

SecureElement::SecureElement(SecureElementState s)
    : pairing_secret_(s.pairing_secret),
      config_(s.config),
      provisioned_(s.provisioned),
      destroyed_(s.destroyed),
      retry_counter_(s.retry_counter),
      blob_(std::move(s.blob)) {
  rng_.load(s.rng_state);
}

SecureElementState SecureElement::export_state() const {
  SecureElementState s;
  s.pairing_secret = pairing_secret_;
  s.config = config_;
  s.provisioned = provisioned_;
  s.destroyed = destroyed_;
  s.retry_counter = retry_counter_;
  s.blob = blob_;
  s.rng_state = rng_.save();
  return s;
}

void SecureElement::provision(ByteView password, const Key32& dek) {
  if (destroyed_) throw Error(Errc::Destroyed);
  if (provisioned_) throw Error(Errc::AlreadyProvisioned);
  const Salt16 salt = rng_.array<16>();
  blob_ = wrap_dek(password, dek, salt, config_.kdf_iterations);
  retry_counter_ = config_.max_retries;
  provisioned_ = true;
}

std::pair<Nonce16, SecureChannel> SecureElement::open_channel(const Nonce16& controller_nonce) {
  if (destroyed_) throw Error(Errc::Destroyed);
  const Nonce16 se_nonce = rng_.array<16>();
  return {se_nonce, SecureChannel::derive(ChannelRole::Element, pairing_secret_,
                                          controller_nonce, se_nonce)};
}

std::optional<Key32> SecureElement::check(ByteView password) {
  if (destroyed_) throw Error(Errc::Destroyed);
  if (!provisioned_) throw Error(Errc::NotProvisioned);
  auto dek = unwrap_dek(blob_, password);
  if (dek) {
    retry_counter_ = config_.max_retries;
    return dek;
  }
  if (retry_counter_ > 0) --retry_counter_;
  if (retry_counter_ == 0) destroy();
  return std::nullopt;
}

ReleaseResult SecureElement::verify_and_release(SecureChannel& channel, ByteView password) {
  if (destroyed_) throw Error(Errc::Destroyed);
  if (!channel.established()) throw Error(Errc::ChannelNotEstablished);
  ReleaseResult r;
  auto dek = check(password);
  r.remaining = retry_counter_;
  r.destroyed = destroyed_;
  if (dek) {
    r.released = true;
    r.sealed_dek = channel.seal(*dek);
  }
  return r;
}

Bytes SecureElement::handle_request(SecureChannel& channel, ByteView sealed_request) {
  if (!channel.established()) throw Error(Errc::ChannelNotEstablished);
  auto plain = channel.open(sealed_request);
  if (!plain || plain->size() < 4 || !std::equal(plain->begin(), plain->begin() + 4, "UNLK")) {
    throw Error(Errc::ChannelAuthFailed, "unlock request rejected by secure element");
  }
  se_wire::Response resp;
  if (destroyed_) {
    resp.verdict = se_wire::Verdict::Destroyed;
  } else {
    auto dek = check(ByteView(*plain).subspan(4));
    resp.remaining = retry_counter_;
    if (dek) {
      resp.verdict = se_wire::Verdict::Released;
      resp.dek = dek;
    } else {
      resp.verdict = destroyed_ ? se_wire::Verdict::Destroyed : se_wire::Verdict::Rejected;
    }
  }
  return channel.seal(se_wire::encode_response(resp));
}

SeStatus SecureElement::status() const {
  return {destroyed_ ? 0 : retry_counter_, destroyed_};
}

void SecureElement::destroy() {
  std::fill(blob_.wrapped_dek.begin(), blob_.wrapped_dek.end(), 0);
  blob_.verifier.fill(0);
  blob_.salt.fill(0);
  retry_counter_ = 0;
  destroyed_ = true;
}

namespace se_wire {

Bytes unlock_request(ByteView password) {
  Bytes out(4 + password.size());
  std::copy_n("UNLK", 4, out.begin());
  std::copy(password.begin(), password.end(), out.begin() + 4);
  return out;
}

Bytes encode_response(const Response& r) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(r.verdict));
  put_u32(out, r.remaining);
  if (r.dek) append(out, *r.dek);
  return out;
}

std::optional<Response> decode_response(ByteView p) {
  if (p.size() != 5 && p.size() != 37) return std::nullopt;
  if (p[0] > 2) return std::nullopt;
  Response r;
  r.verdict = static_cast<Verdict>(p[0]);
  r.remaining = get_u32(p, 1);
  if (p.size() == 37) {
    Key32 k{};
    std::copy_n(p.begin() + 5, 32, k.begin());
    r.dek = k;
  }
  return r;
}

}  // namespace se_wire

}  // namespace fvsim
