#include "fvsim/drive.hpp"

#include <algorithm>

#include "fvsim/crypto.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {

constexpr std::string_view kSlotCounter = "counter";
constexpr std::string_view kSlotKeyBlob = "keyblob";
constexpr std::string_view kSlotLockPassword = "emmc_lock_password";
constexpr std::string_view kSlotRpmbKey = "rpmb_key";
constexpr std::string_view kSlotPairing = "se_pairing";

constexpr std::uint32_t kRpmbCounterAddress = 0;

template <std::size_t N>
std::array<std::uint8_t, N> fixed(const Bytes& b) {
  std::array<std::uint8_t, N> out{};
  std::copy_n(b.begin(), std::min(N, b.size()), out.begin());
  return out;
}

}  // namespace

std::string_view to_string(DriveState s) {
  switch (s) {
    case DriveState::Unprovisioned: return "Unprovisioned";
    case DriveState::Locked: return "Locked";
    case DriveState::Unlocked: return "Unlocked";
    case DriveState::Wiped: return "Wiped";
  }
  return "?";
}

// ---------------------------------------------------------------- CounterRecord

CounterRecord CounterRecord::make(std::uint32_t remaining, std::uint32_t epoch, const Key32& secret) {
  CounterRecord r;
  r.remaining = remaining;
  r.epoch = epoch;
  r.tag = crypto::hmac_sha256(secret, ByteView(r.serialize()).first(12));
  return r;
}

Bytes CounterRecord::serialize() const {
  Bytes out;
  out.reserve(kSize);
  put_u32(out, remaining);
  put_u32(out, epoch);
  put_u32(out, reserved);
  append(out, tag);
  return out;
}

CounterRecord CounterRecord::parse(ByteView bytes) {
  if (bytes.size() < kSize) throw Error(Errc::IntegrityTagMismatch, "counter record truncated");
  CounterRecord r;
  r.remaining = get_u32(bytes, 0);
  r.epoch = get_u32(bytes, 4);
  r.reserved = get_u32(bytes, 8);
  std::copy_n(bytes.begin() + 12, 32, r.tag.begin());
  return r;
}

bool CounterRecord::tag_valid(const Key32& secret) const {
  return crypto::equal(crypto::hmac_sha256(secret, ByteView(serialize()).first(12)), tag);
}

// ---------------------------------------------------------------- DriveMedia

DriveMedia DriveMedia::create(MediaKind kind, const MediaConfig& config) {
  switch (kind) {
    case MediaKind::Nand: return DriveMedia(NandDevice(config.nand));
    case MediaKind::BlockDev: return DriveMedia(BlockDevice(config.block_size, config.block_count));
    case MediaKind::Emmc: return DriveMedia(EmmcDevice(config.emmc));
  }
  throw Error(Errc::ProfileMediaMismatch, "unknown media kind");
}

MediaKind DriveMedia::kind() const {
  switch (device_.index()) {
    case 0: return MediaKind::Nand;
    case 1: return MediaKind::BlockDev;
    default: return MediaKind::Emmc;
  }
}

std::uint64_t DriveMedia::capacity() const {
  return std::visit(
      [](const auto& d) -> std::uint64_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NandDevice>) return d.geometry().capacity();
        else if constexpr (std::is_same_v<T, BlockDevice>) return d.capacity();
        else return d.user_capacity();
      },
      device_);
}

std::uint64_t DriveMedia::region_unit() const {
  if (const auto* n = std::get_if<NandDevice>(&device_)) return n->geometry().block_bytes();
  return crypto::kSectorSize;
}

Bytes DriveMedia::read_bytes(std::uint64_t offset, std::size_t length) {
  return std::visit(
      [&](auto& d) -> Bytes {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NandDevice>) return nand_read_bytes(d, offset, length);
        else return d.read_bytes(offset, length);
      },
      device_);
}

void DriveMedia::write_bytes(std::uint64_t offset, ByteView data) {
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NandDevice>) nand_write_bytes(d, offset, data);
        else d.write_bytes(offset, data);
      },
      device_);
}

MediaImage DriveMedia::dump(Provenance level) {
  if (auto* e = emmc()) return level == Provenance::Die ? e->die_dump() : e->dump();
  MediaImage img = std::visit(
      [](auto& d) -> MediaImage {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmmcDevice>) return {};
        else return d.dump();
      },
      device_);
  img.provenance = level;
  return img;
}

void DriveMedia::restore(const MediaImage& image) {
  if (auto* e = emmc()) {
    if (image.provenance == Provenance::Die) e->die_restore(image);
    else e->restore(image);
    return;
  }
  std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (!std::is_same_v<T, EmmcDevice>) d.restore(image);
      },
      device_);
}

MediaImage DriveMedia::persist_image() const {
  return std::visit(
      [](const auto& d) -> MediaImage {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmmcDevice>) return d.die_dump();
        else return d.dump();
      },
      device_);
}

DriveMedia DriveMedia::from_persist_image(MediaKind kind, const MediaConfig& config,
                                          const MediaImage& image) {
  DriveMedia m = create(kind, config);
  if (auto* e = m.emmc()) e->die_restore(image);
  else m.restore(image);
  return m;
}

// ---------------------------------------------------------------- Drive

Drive::Drive(DriveProfile profile, ProvisionOptions options, DriveMedia media)
    : profile_(std::move(profile)),
      options_(std::move(options)),
      media_(std::move(media)),
      rng_(options_.seed) {
  const std::uint64_t unit = media_.region_unit();
  layout_.keyblob_offset = 0;
  layout_.counter_offset = unit;
  layout_.volume_offset = 2 * unit;
  const std::uint64_t usable = media_.capacity() / profile_.capacity_divisor;
  if (usable <= layout_.volume_offset + crypto::kSectorSize) {
    throw Error(Errc::GeometryMismatch, "medium too small for firmware layout");
  }
  layout_.volume_sectors = (usable - layout_.volume_offset) / crypto::kSectorSize;
}

Drive Drive::provision(const DriveProfile& profile, ByteView password,
                       const ProvisionOptions& options) {
  profile.validate();
  if (options.max_retries == 0 || options.kdf_iterations == 0) {
    throw Error(Errc::BadScenario, "max_retries and kdf_iterations must be >= 1");
  }
  Drive d(profile, options, DriveMedia::create(profile.media_kind, options.media));

  const Key32 dek = d.rng_.array<32>();
  const Key32 counter_secret = d.rng_.array<32>();

  if (profile.uses_emmc_lock) {
    d.mcu_store_[std::string(kSlotLockPassword)] = d.rng_.bytes(16);
    d.media_.emmc()->set_password(d.mcu_store_[std::string(kSlotLockPassword)]);
  }
  if (profile.uses_rpmb) {
    const Key32 rpmb_key = d.rng_.array<32>();
    d.mcu_store_[std::string(kSlotRpmbKey)] = Bytes(rpmb_key.begin(), rpmb_key.end());
    d.media_.emmc()->rpmb_program_key(rpmb_key);
  }

  switch (profile.key_store) {
    case KeyStore::SecureElement: {
      const Key32 pairing = d.rng_.array<32>();
      d.mcu_store_[std::string(kSlotPairing)] = Bytes(pairing.begin(), pairing.end());
      d.se_.emplace(pairing, d.rng_.fork_seed(),
                    SeConfig{options.max_retries, options.kdf_iterations});
      d.se_->provision(password, dek);
      break;
    }
    case KeyStore::WrappedBlobOnMedia: {
      const KeyBlob blob = wrap_dek(password, dek, d.rng_.array<16>(), options.kdf_iterations);
      d.media_.write_bytes(d.layout_.keyblob_offset, blob.serialize());
      break;
    }
    case KeyStore::BatterySram: {
      const KeyBlob blob = wrap_dek(password, dek, d.rng_.array<16>(), options.kdf_iterations);
      d.sram_[std::string(kSlotKeyBlob)] = blob.serialize();
      break;
    }
  }

  if (profile.counter_store != CounterStore::SecureElement) {
    Bytes slot = CounterRecord::make(options.max_retries, 1, counter_secret).serialize();
    append(slot, counter_secret);
    d.write_counter_slot(slot);
  }

  // Format: every volume sector holds the encryption of zeros.
  {
    constexpr std::uint64_t kChunkSectors = 256;
    const crypto::SectorCipher cipher(dek);
    Bytes chunk;
    for (std::uint64_t s = 0; s < d.layout_.volume_sectors; s += kChunkSectors) {
      const std::uint64_t n = std::min(kChunkSectors, d.layout_.volume_sectors - s);
      chunk.assign(n * crypto::kSectorSize, 0);
      cipher.encrypt(s, chunk, chunk);
      d.media_.write_bytes(d.layout_.volume_offset + s * crypto::kSectorSize, chunk);
    }
  }

  d.state_ = DriveState::Locked;
  d.power_cycle(true);
  return d;
}

Drive Drive::resume(DriveSnapshot snapshot, DriveMedia media) {
  Drive d(std::move(snapshot.profile), std::move(snapshot.options), std::move(media));
  d.state_ = snapshot.state;
  d.mcu_store_ = std::move(snapshot.mcu_store);
  d.sram_ = std::move(snapshot.sram);
  if (snapshot.secure_element) d.se_.emplace(std::move(*snapshot.secure_element));
  d.rng_.load(snapshot.rng_state);
  d.boot_media();
  return d;
}

DriveSnapshot Drive::snapshot() const {
  DriveSnapshot s;
  s.profile = profile_;
  s.options = options_;
  // Volatile key material never leaves the session.
  s.state = state_ == DriveState::Unlocked ? DriveState::Locked : state_;
  s.mcu_store = mcu_store_;
  s.sram = sram_;
  if (se_) s.secure_element = se_->export_state();
  s.rng_state = rng_.save();
  return s;
}

const TrafficLog& Drive::se_bus_tap() const {
  if (!se_tap_) throw Error(Errc::TapNotEnabled);
  return *se_tap_;
}

// ---------------------------------------------------------------- counter

Bytes Drive::read_counter_slot() {
  switch (profile_.counter_store) {
    case CounterStore::NandUserArea:
    case CounterStore::EmmcUserArea:
      return media_.read_bytes(layout_.counter_offset, CounterRecord::kSlotSize);
    case CounterStore::McuInternal:
    case CounterStore::BatterySram: {
      const InternalStore& store =
          profile_.counter_store == CounterStore::McuInternal ? mcu_store_ : sram_;
      auto it = store.find(std::string(kSlotCounter));
      if (it == store.end()) throw Error(Errc::IntegrityTagMismatch, "counter slot empty");
      return it->second;
    }
    case CounterStore::EmmcRpmb: {
      EmmcDevice& emmc = *media_.emmc();
      const RpmbHost host = rpmb_host();
      const Nonce16 nonce = rng_.array<16>();
      RpmbFrame resp = host.auth_read(emmc, nonce, kRpmbCounterAddress, 1);
      if (resp.result != RpmbResult::Ok ||
          host.verify_response(resp, RpmbRequest::AuthRead, &nonce) != ResponseCheck::Ok) {
        throw Error(Errc::IntegrityTagMismatch, "RPMB read response failed verification");
      }
      // The firmware keeps its own view of the write counter for the session.
      if (!rpmb_counter_cache_) rpmb_counter_cache_ = resp.counter;
      resp.payload.resize(CounterRecord::kSlotSize);
      return resp.payload;
    }
    case CounterStore::SecureElement:
      break;
  }
  throw Error(Errc::IntegrityTagMismatch, "counter lives in the secure element");
}

void Drive::write_counter_slot(ByteView slot) {
  switch (profile_.counter_store) {
    case CounterStore::NandUserArea:
    case CounterStore::EmmcUserArea:
      media_.write_bytes(layout_.counter_offset, slot);
      return;
    case CounterStore::McuInternal:
      mcu_store_[std::string(kSlotCounter)] = Bytes(slot.begin(), slot.end());
      return;
    case CounterStore::BatterySram:
      sram_[std::string(kSlotCounter)] = Bytes(slot.begin(), slot.end());
      return;
    case CounterStore::EmmcRpmb: {
      EmmcDevice& emmc = *media_.emmc();
      const RpmbHost host = rpmb_host();
      if (!rpmb_counter_cache_) {
        const Nonce16 nonce = rng_.array<16>();
        RpmbFrame c = host.read_counter(emmc, nonce);
        if (host.verify_response(c, RpmbRequest::ReadCounter, &nonce) != ResponseCheck::Ok) {
          throw Error(Errc::RpmbWriteRejected, "counter read response failed verification");
        }
        rpmb_counter_cache_ = c.counter;
      }
      Bytes payload(slot.begin(), slot.end());
      payload.resize(kRpmbBlockSize, 0);
      RpmbFrame resp = host.auth_write(emmc, *rpmb_counter_cache_, kRpmbCounterAddress, payload);
      if (resp.result != RpmbResult::Ok) {
        rpmb_counter_cache_.reset();
        throw Error(Errc::RpmbWriteRejected, std::string(to_string(resp.result)));
      }
      if (host.verify_response(resp, RpmbRequest::AuthWrite, nullptr) != ResponseCheck::Ok) {
        rpmb_counter_cache_.reset();
        throw Error(Errc::RpmbWriteRejected, "write response failed verification");
      }
      rpmb_counter_cache_ = resp.counter;
      return;
    }
    case CounterStore::SecureElement:
      return;
  }
}

Key32 Drive::counter_secret() {
  Bytes slot = read_counter_slot();
  return fixed<32>(Bytes(slot.begin() + CounterRecord::kSize, slot.end()));
}

RpmbHost Drive::rpmb_host() const {
  return RpmbHost(fixed<32>(mcu_store_.at(std::string(kSlotRpmbKey))));
}

CounterRecord Drive::load_counter() {
  if (profile_.counter_store == CounterStore::SecureElement) {
    CounterRecord r;
    r.remaining = se_->status().remaining;
    return r;
  }
  Bytes slot = read_counter_slot();
  const Key32 secret = fixed<32>(Bytes(slot.begin() + CounterRecord::kSize, slot.end()));
  CounterRecord r = CounterRecord::parse(slot);
  if (!r.tag_valid(secret) || r.remaining > options_.max_retries) {
    throw Error(Errc::IntegrityTagMismatch, "counter record failed its integrity check");
  }
  return r;
}

CounterRecord Drive::persist_counter(std::uint32_t remaining) {
  if (profile_.counter_store == CounterStore::SecureElement) return load_counter();
  const CounterRecord previous = load_counter();
  const Key32 secret = counter_secret();
  const CounterRecord next = CounterRecord::make(remaining, previous.epoch + 1, secret);
  Bytes slot = next.serialize();
  append(slot, secret);
  write_counter_slot(slot);
  return next;
}

std::uint32_t Drive::remaining_attempts() {
  if (state_ == DriveState::Wiped) return 0;
  return load_counter().remaining;
}

// ---------------------------------------------------------------- unlock / wipe

UnlockResult Drive::unlock(ByteView password) {
  if (state_ == DriveState::Wiped) throw Error(Errc::DriveWiped);
  if (state_ == DriveState::Unlocked) throw Error(Errc::AlreadyUnlocked);
  if (state_ == DriveState::Unprovisioned) throw Error(Errc::NotProvisioned);
  if (profile_.key_store == KeyStore::SecureElement) return unlock_via_secure_element(password);
  return unlock_via_blob(password);
}

UnlockResult Drive::unlock_via_secure_element(ByteView password) {
  if (se_->status().destroyed) {
    state_ = DriveState::Wiped;
    throw Error(Errc::DriveWiped);
  }
  const Key32 pairing = fixed<32>(mcu_store_.at(std::string(kSlotPairing)));
  const Nonce16 controller_nonce = rng_.array<16>();
  auto [se_nonce, se_end] = se_->open_channel(controller_nonce);
  SecureChannel channel =
      SecureChannel::derive(ChannelRole::Controller, pairing, controller_nonce, se_nonce);
  if (se_tap_) {
    se_tap_->record(BusSide::Host, BusOp::ChannelMessage, 0, controller_nonce);
    se_tap_->record(BusSide::Host, BusOp::ChannelMessage, 1, se_nonce);
  }

  const Bytes request = channel.seal(se_wire::unlock_request(password));
  if (se_tap_) se_tap_->record(BusSide::Host, BusOp::ChannelMessage, 0, request);
  const Bytes reply = se_->handle_request(se_end, request);
  if (se_tap_) se_tap_->record(BusSide::Host, BusOp::ChannelMessage, 1, reply);

  auto plain = channel.open(reply);
  auto resp = plain ? se_wire::decode_response(*plain) : std::nullopt;
  if (!resp) throw Error(Errc::ChannelAuthFailed, "secure element reply rejected");

  UnlockResult r;
  r.remaining = resp->remaining;
  switch (resp->verdict) {
    case se_wire::Verdict::Released:
      dek_ = *resp->dek;
      state_ = DriveState::Unlocked;
      r.unlocked = true;
      break;
    case se_wire::Verdict::Rejected:
      break;
    case se_wire::Verdict::Destroyed:
      wipe();
      r.wiped = true;
      r.remaining = 0;
      break;
  }
  return r;
}

UnlockResult Drive::unlock_via_blob(ByteView password) {
  const CounterRecord record = load_counter();
  if (record.remaining == 0) {
    wipe();
    throw Error(Errc::DriveWiped);
  }
  auto blob = read_blob();
  if (!blob) {
    wipe();
    throw Error(Errc::DriveWiped, "key material missing");
  }

  UnlockResult r;
  if (auto dek = unwrap_dek(*blob, password)) {
    if (record.remaining != options_.max_retries) persist_counter(options_.max_retries);
    dek_ = *dek;
    state_ = DriveState::Unlocked;
    r.unlocked = true;
    r.remaining = options_.max_retries;
    return r;
  }

  r.remaining = record.remaining - 1;
  persist_counter(r.remaining);
  if (r.remaining == 0) {
    wipe();
    r.wiped = true;
  }
  return r;
}

std::optional<KeyBlob> Drive::read_blob() {
  if (profile_.key_store == KeyStore::BatterySram) {
    auto it = sram_.find(std::string(kSlotKeyBlob));
    if (it == sram_.end()) return std::nullopt;
    return KeyBlob::parse(it->second);
  }
  return KeyBlob::parse(media_.read_bytes(layout_.keyblob_offset, KeyBlob::kSerializedSize));
}

void Drive::wipe() {
  switch (profile_.key_store) {
    case KeyStore::SecureElement:
      if (!se_->status().destroyed) se_->destroy();
      break;
    case KeyStore::WrappedBlobOnMedia:
      media_.write_bytes(layout_.keyblob_offset, Bytes(KeyBlob::kSerializedSize, 0));
      break;
    case KeyStore::BatterySram:
      sram_.erase(std::string(kSlotKeyBlob));
      break;
  }
  if (profile_.erase_on_wipe) {
    const Bytes zeros(256 * crypto::kSectorSize, 0);
    for (std::uint64_t s = 0; s < layout_.volume_sectors; s += 256) {
      const std::uint64_t n = std::min<std::uint64_t>(256, layout_.volume_sectors - s);
      media_.write_bytes(layout_.volume_offset + s * crypto::kSectorSize,
                         ByteView(zeros).first(n * crypto::kSectorSize));
    }
  }
  dek_.reset();
  state_ = DriveState::Wiped;
}

void Drive::power_cycle(bool battery_present) {
  dek_.reset();
  rpmb_counter_cache_.reset();
  if (!battery_present) {
    sram_.clear();
    if (profile_.key_store == KeyStore::BatterySram && state_ != DriveState::Unprovisioned) {
      state_ = DriveState::Wiped;
    }
  }
  if (state_ == DriveState::Unlocked) state_ = DriveState::Locked;
  boot_media();
}

void Drive::boot_media() {
  if (EmmcDevice* emmc = media_.emmc()) {
    emmc->power_cycle();
    // Firmware opens the eMMC lock on every boot with its stored password.
    auto it = mcu_store_.find(std::string(kSlotLockPassword));
    if (profile_.uses_emmc_lock && it != mcu_store_.end()) emmc->unlock(it->second);
  }
}

// ---------------------------------------------------------------- user volume

void Drive::check_volume_range(std::uint64_t sector, std::uint64_t count) const {
  if (sector + count > layout_.volume_sectors || sector + count < sector) {
    throw Error(Errc::OutOfRange, "sector range past end of volume");
  }
}

Bytes Drive::read_user(std::uint64_t sector, std::uint32_t count) {
  if (state_ != DriveState::Unlocked || !dek_) throw Error(Errc::DriveLockedOrWiped);
  check_volume_range(sector, count);
  Bytes data = media_.read_bytes(layout_.volume_offset + sector * crypto::kSectorSize,
                                 static_cast<std::size_t>(count) * crypto::kSectorSize);
  crypto::SectorCipher(*dek_).decrypt(sector, data, data);
  return data;
}

void Drive::write_user(std::uint64_t sector, ByteView data) {
  if (state_ != DriveState::Unlocked || !dek_) throw Error(Errc::DriveLockedOrWiped);
  if (data.size() % crypto::kSectorSize != 0) {
    throw Error(Errc::SizeMismatch, "user writes are whole 512-byte sectors");
  }
  check_volume_range(sector, data.size() / crypto::kSectorSize);
  Bytes ct(data.begin(), data.end());
  crypto::SectorCipher(*dek_).encrypt(sector, ct, ct);
  media_.write_bytes(layout_.volume_offset + sector * crypto::kSectorSize, ct);
}

}  // namespace fvsim
