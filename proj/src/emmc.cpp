#include "fvsim/emmc.hpp"

#include <algorithm>

#include "fvsim/crypto.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {

constexpr std::uint8_t kMetaVersion = 1;
constexpr std::uint8_t kFlagKey = 0x01;
constexpr std::uint8_t kFlagPassword = 0x02;
constexpr std::size_t kMetaBytes = 4 + 1 + 1 + 4 + 32 + 2 + kEmmcMaxPasswordLength;

std::uint32_t div_ceil(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint32_t>((a + b - 1) / b);
}

Bytes encode_meta(const EmmcMeta& m) {
  Bytes out;
  out.reserve(kMetaBytes);
  append(out, view("EMMC"));
  out.push_back(kMetaVersion);
  out.push_back(static_cast<std::uint8_t>((m.key_programmed ? kFlagKey : 0) |
                                          (m.password_set ? kFlagPassword : 0)));
  put_u32(out, m.write_counter);
  append(out, m.auth_key);
  put_u16(out, static_cast<std::uint16_t>(m.password.size()));
  append(out, m.password);
  out.resize(kMetaBytes, 0);
  return out;
}

EmmcMeta decode_meta(ByteView page) {
  EmmcMeta m;
  // A blank die (never formatted) reads as factory state.
  if (!std::equal(page.begin(), page.begin() + 4, "EMMC")) return m;
  const std::uint8_t flags = page[5];
  m.key_programmed = (flags & kFlagKey) != 0;
  m.password_set = (flags & kFlagPassword) != 0;
  m.write_counter = get_u32(page, 6);
  std::copy_n(page.begin() + 10, 32, m.auth_key.begin());
  const std::uint16_t len = std::min<std::uint16_t>(get_u16(page, 42), kEmmcMaxPasswordLength);
  m.password.assign(page.begin() + 44, page.begin() + 44 + len);
  return m;
}

RpmbFrame response_for(const RpmbFrame& req, RpmbResult result, std::uint32_t counter) {
  RpmbFrame r;
  r.type = static_cast<std::uint8_t>((req.type & ~kRpmbResponseBit) | kRpmbResponseBit);
  r.address = req.address;
  r.counter = counter;
  r.nonce = req.nonce;
  r.result = result;
  return r;
}

}  // namespace

std::string_view to_string(BusOp op) {
  switch (op) {
    case BusOp::Read: return "read";
    case BusOp::Write: return "write";
    case BusOp::SetPassword: return "set-password";
    case BusOp::Unlock: return "unlock";
    case BusOp::RpmbRequest: return "rpmb-request";
    case BusOp::RpmbResponse: return "rpmb-response";
    case BusOp::PageRead: return "page-read";
    case BusOp::PageProgram: return "page-program";
    case BusOp::BlockErase: return "block-erase";
    case BusOp::ChannelMessage: return "channel-message";
  }
  return "unknown";
}

class EmmcDevice::Tap : public NandObserver {
 public:
  void on_read(std::uint32_t block, std::uint32_t page, ByteView data) override {
    log.record(BusSide::Nand, BusOp::PageRead, address(block, page), data);
  }
  void on_program(std::uint32_t block, std::uint32_t page, ByteView data) override {
    log.record(BusSide::Nand, BusOp::PageProgram, address(block, page), data);
  }
  void on_erase(std::uint32_t block) override {
    log.record(BusSide::Nand, BusOp::BlockErase, static_cast<std::uint64_t>(block) << 32, {});
  }

  TrafficLog log;

 private:
  static std::uint64_t address(std::uint32_t block, std::uint32_t page) {
    return (static_cast<std::uint64_t>(block) << 32) | page;
  }
};

NandGeometry EmmcConfig::internal_geometry() const {
  NandGeometry g{page_size, pages_per_block, 0};
  g.block_count = 1 + rpmb_nand_blocks() + div_ceil(user_capacity(), g.block_bytes());
  return g;
}

std::uint32_t EmmcConfig::rpmb_nand_blocks() const {
  return div_ceil(rpmb_bytes, static_cast<std::uint64_t>(page_size) * pages_per_block);
}

EmmcDevice::EmmcDevice(EmmcConfig config)
    : config_(config), nand_(config.internal_geometry()) {
  if (config_.user_blocks == 0 || config_.rpmb_bytes == 0 ||
      config_.rpmb_bytes % kRpmbBlockSize != 0) {
    throw Error(Errc::GeometryMismatch, "eMMC user area and RPMB size must be non-zero");
  }
  if (config_.page_size < kMetaBytes) {
    throw Error(Errc::GeometryMismatch, "eMMC page too small for controller metadata");
  }
  store_meta(EmmcMeta{});
}

EmmcDevice::~EmmcDevice() = default;
EmmcDevice::EmmcDevice(EmmcDevice&&) noexcept = default;
EmmcDevice& EmmcDevice::operator=(EmmcDevice&&) noexcept = default;

EmmcDevice::EmmcDevice(const EmmcDevice& other)
    : config_(other.config_), nand_(other.nand_), session_unlocked_(other.session_unlocked_) {}

EmmcDevice& EmmcDevice::operator=(const EmmcDevice& other) {
  if (this != &other) {
    config_ = other.config_;
    nand_ = other.nand_;
    session_unlocked_ = other.session_unlocked_;
    tap_.reset();
  }
  return *this;
}

NandObserver* EmmcDevice::observer() { return tap_.get(); }

void EmmcDevice::log_host(BusOp op, std::uint64_t address, ByteView payload) {
  if (tap_) tap_->log.record(BusSide::Host, op, address, payload);
}

std::uint64_t EmmcDevice::rpmb_base() const { return nand_.geometry().block_bytes(); }

std::uint64_t EmmcDevice::user_base() const {
  return nand_.geometry().block_bytes() * (1 + config_.rpmb_nand_blocks());
}

EmmcMeta EmmcDevice::load_meta() {
  return decode_meta(nand_read_bytes(nand_, 0, kMetaBytes, observer()));
}

EmmcMeta EmmcDevice::inspect_meta() const {
  return decode_meta(nand_.page_view(0, 0));
}

void EmmcDevice::store_meta(const EmmcMeta& meta) {
  nand_write_bytes(nand_, 0, encode_meta(meta), observer());
}

bool EmmcDevice::password_set() const { return inspect_meta().password_set; }

bool EmmcDevice::locked() const { return password_set() && !session_unlocked_; }

void EmmcDevice::check_unlocked() {
  EmmcMeta meta = load_meta();
  if (meta.password_set && !session_unlocked_) throw Error(Errc::DeviceLocked);
}

void EmmcDevice::check_user_range(std::uint64_t offset, std::size_t length) const {
  if (offset + length > config_.user_capacity()) {
    throw Error(Errc::OutOfRange, "eMMC user-area range");
  }
}

Bytes EmmcDevice::read(std::uint32_t block, std::uint32_t count) {
  return read_bytes(static_cast<std::uint64_t>(block) * kEmmcBlockSize,
                    static_cast<std::size_t>(count) * kEmmcBlockSize);
}

void EmmcDevice::write(std::uint32_t block, ByteView data) {
  if (data.size() % kEmmcBlockSize != 0) {
    throw Error(Errc::SizeMismatch, "eMMC writes are whole 512-byte blocks");
  }
  write_bytes(static_cast<std::uint64_t>(block) * kEmmcBlockSize, data);
}

Bytes EmmcDevice::read_bytes(std::uint64_t offset, std::size_t length) {
  check_unlocked();
  check_user_range(offset, length);
  Bytes out = nand_read_bytes(nand_, user_base() + offset, length, observer());
  log_host(BusOp::Read, offset, out);
  return out;
}

void EmmcDevice::write_bytes(std::uint64_t offset, ByteView data) {
  check_unlocked();
  check_user_range(offset, data.size());
  log_host(BusOp::Write, offset, data);
  nand_write_bytes(nand_, user_base() + offset, data, observer());
}

void EmmcDevice::set_password(ByteView password) {
  log_host(BusOp::SetPassword, 0, password);
  if (password.size() > kEmmcMaxPasswordLength) throw Error(Errc::PasswordTooLong);
  EmmcMeta meta = load_meta();
  if (meta.password_set && !session_unlocked_) throw Error(Errc::DeviceLocked);
  meta.password_set = true;
  meta.password.assign(password.begin(), password.end());
  store_meta(meta);
}

void EmmcDevice::unlock(ByteView password) {
  log_host(BusOp::Unlock, 0, password);
  EmmcMeta meta = load_meta();
  if (!meta.password_set) {
    session_unlocked_ = true;
    return;
  }
  if (!crypto::equal(meta.password, password)) throw Error(Errc::WrongPassword);
  session_unlocked_ = true;
}

void EmmcDevice::power_cycle() { session_unlocked_ = false; }

void EmmcDevice::rpmb_program_key(const Key32& key) {
  RpmbFrame req;
  req.type = static_cast<std::uint8_t>(RpmbRequest::ProgramKey);
  req.payload.assign(key.begin(), key.end());
  RpmbFrame resp = rpmb_request(req);
  if (resp.result == RpmbResult::KeyAlreadyProgrammed) throw Error(Errc::KeyAlreadyProgrammed);
  if (resp.result != RpmbResult::Ok) {
    throw Error(Errc::KeyAlreadyProgrammed, std::string(to_string(resp.result)));
  }
}

RpmbFrame EmmcDevice::rpmb_request(const RpmbFrame& request) {
  Bytes wire = rpmb_request_wire(request.to_wire());
  auto parsed = RpmbFrame::from_wire(wire);
  // The device only ever emits well-formed frames.
  return *parsed;
}

Bytes EmmcDevice::rpmb_request_wire(ByteView wire) {
  log_host(BusOp::RpmbRequest, 0, wire);
  EmmcMeta meta = load_meta();
  auto parsed = RpmbFrame::from_wire(wire);

  RpmbFrame resp;
  if (meta.key_programmed && wire.size() >= 32 &&
      !crypto::equal(crypto::hmac_sha256(meta.auth_key, wire.first(wire.size() - 32)),
                     wire.last(32))) {
    RpmbFrame stub;
    if (parsed) stub = *parsed;
    resp = response_for(stub, RpmbResult::MacMismatch, meta.write_counter);
  } else if (!parsed || parsed->is_response()) {
    RpmbFrame stub;
    if (parsed) stub = *parsed;
    resp = response_for(stub, RpmbResult::GeneralFailure, meta.write_counter);
  } else {
    resp = handle(*parsed, meta);
  }
  if (meta.key_programmed) resp.sign(meta.auth_key);
  Bytes out = resp.to_wire();
  log_host(BusOp::RpmbResponse, 0, out);
  return out;
}

RpmbFrame EmmcDevice::handle(const RpmbFrame& req, EmmcMeta& meta) {
  const std::uint32_t blocks = config_.rpmb_block_count();
  switch (req.request()) {
    case RpmbRequest::ProgramKey: {
      if (meta.key_programmed) {
        return response_for(req, RpmbResult::KeyAlreadyProgrammed, meta.write_counter);
      }
      if (req.payload.size() != 32) {
        return response_for(req, RpmbResult::GeneralFailure, meta.write_counter);
      }
      std::copy_n(req.payload.begin(), 32, meta.auth_key.begin());
      meta.key_programmed = true;
      store_meta(meta);
      return response_for(req, RpmbResult::Ok, meta.write_counter);
    }
    case RpmbRequest::ReadCounter:
    case RpmbRequest::AuthWrite:
    case RpmbRequest::AuthRead:
      break;
    default:
      return response_for(req, RpmbResult::GeneralFailure, meta.write_counter);
  }

  if (!meta.key_programmed) {
    return response_for(req, RpmbResult::KeyNotProgrammed, meta.write_counter);
  }

  if (req.request() == RpmbRequest::ReadCounter) {
    return response_for(req, RpmbResult::Ok, meta.write_counter);
  }

  if (req.request() == RpmbRequest::AuthWrite) {
    if (req.counter != meta.write_counter) {
      return response_for(req, RpmbResult::CounterMismatch, meta.write_counter);
    }
    if (meta.write_counter == UINT32_MAX) {
      return response_for(req, RpmbResult::WriteCounterExpired, meta.write_counter);
    }
    if (req.payload.empty() || req.payload.size() % kRpmbBlockSize != 0) {
      return response_for(req, RpmbResult::GeneralFailure, meta.write_counter);
    }
    const std::uint64_t count = req.payload.size() / kRpmbBlockSize;
    if (static_cast<std::uint64_t>(req.address) + count > blocks) {
      return response_for(req, RpmbResult::AddressOutOfRange, meta.write_counter);
    }
    nand_write_bytes(nand_, rpmb_base() + static_cast<std::uint64_t>(req.address) * kRpmbBlockSize,
                     req.payload, observer());
    ++meta.write_counter;
    store_meta(meta);
    return response_for(req, RpmbResult::Ok, meta.write_counter);
  }

  // AuthRead
  if (req.payload.size() != 4) {
    return response_for(req, RpmbResult::GeneralFailure, meta.write_counter);
  }
  const std::uint32_t count = get_u32(req.payload, 0);
  if (count == 0 || static_cast<std::uint64_t>(req.address) + count > blocks) {
    return response_for(req, RpmbResult::AddressOutOfRange, meta.write_counter);
  }
  RpmbFrame resp = response_for(req, RpmbResult::Ok, meta.write_counter);
  resp.payload = nand_read_bytes(nand_, rpmb_base() + static_cast<std::uint64_t>(req.address) * kRpmbBlockSize,
                                 static_cast<std::size_t>(count) * kRpmbBlockSize, observer());
  return resp;
}

MediaImage EmmcDevice::dump() {
  check_unlocked();
  MediaImage img;
  img.provenance = Provenance::Package;
  img.kind = ImageKind::Block;
  img.unit_size = kEmmcBlockSize;
  img.units_per_group = 1;
  img.group_count = config_.user_blocks;
  img.data = nand_read_bytes(nand_, user_base(), config_.user_capacity());
  return img;
}

void EmmcDevice::restore(const MediaImage& image) {
  if (image.kind != ImageKind::Block || image.unit_size != kEmmcBlockSize ||
      image.units_per_group != 1 || image.group_count != config_.user_blocks ||
      image.data.size() != config_.user_capacity()) {
    throw Error(Errc::GeometryMismatch, "image does not match eMMC user area");
  }
  check_unlocked();
  nand_write_bytes(nand_, user_base(), image.data);
}

MediaImage EmmcDevice::die_dump() const { return nand_.dump(Provenance::Die); }

void EmmcDevice::die_restore(const MediaImage& image) {
  nand_.restore(image);
  // Die access means the package was off the board; it comes back powered down.
  session_unlocked_ = false;
}

void EmmcDevice::enable_tap() {
  if (!tap_) tap_ = std::make_unique<Tap>();
}

void EmmcDevice::disable_tap() { tap_.reset(); }

const TrafficLog& EmmcDevice::bus_tap() const {
  if (!tap_) throw Error(Errc::TapNotEnabled);
  return tap_->log;
}

void EmmcDevice::clear_tap() {
  if (tap_) tap_->log.clear();
}

}  // namespace fvsim
