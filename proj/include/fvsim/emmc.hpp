#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "fvsim/bytes.hpp"
#include "fvsim/media_image.hpp"
#include "fvsim/nand.hpp"
#include "fvsim/rpmb.hpp"
#include "fvsim/traffic.hpp"

namespace fvsim {

inline constexpr std::uint32_t kEmmcBlockSize = 512;
inline constexpr std::size_t kEmmcMaxPasswordLength = 128;

struct EmmcConfig {
  std::uint32_t page_size = 2048;
  std::uint32_t pages_per_block = 64;
  std::uint32_t user_blocks = 131072;  // 64 MiB of 512-byte blocks
  std::uint32_t rpmb_bytes = 128 * 1024;

  // Internal die layout: [meta block][RPMB blocks][user-area blocks].
  NandGeometry internal_geometry() const;
  std::uint32_t rpmb_nand_blocks() const;
  std::uint32_t rpmb_block_count() const { return rpmb_bytes / kRpmbBlockSize; }
  std::uint64_t user_capacity() const {
    return static_cast<std::uint64_t>(user_blocks) * kEmmcBlockSize;
  }

  bool operator==(const EmmcConfig&) const = default;
};

// Protocol-visible persistent state, decoded from the metadata page.
struct EmmcMeta {
  bool key_programmed = false;
  bool password_set = false;
  std::uint32_t write_counter = 0;
  Key32 auth_key{};
  Bytes password;
};

// eMMC package: a controller with no non-volatile memory of its own in front of
// a NAND die. Every persistent field (user area, lock password, RPMB key,
// counter and data) lives in the internal NAND and is re-read on every
// operation, so rolling the die back rolls the whole device back.
class EmmcDevice {
 public:
  explicit EmmcDevice(EmmcConfig config = {});
  ~EmmcDevice();
  // Copies carry the die contents and power state, never an attached tap.
  EmmcDevice(const EmmcDevice& other);
  EmmcDevice& operator=(const EmmcDevice& other);
  EmmcDevice(EmmcDevice&&) noexcept;
  EmmcDevice& operator=(EmmcDevice&&) noexcept;

  const EmmcConfig& config() const { return config_; }
  std::uint32_t user_blocks() const { return config_.user_blocks; }
  std::uint64_t user_capacity() const { return config_.user_capacity(); }

  // --- user area (ROM1) ---
  Bytes read(std::uint32_t block, std::uint32_t count);
  void write(std::uint32_t block, ByteView data);
  Bytes read_bytes(std::uint64_t offset, std::size_t length);
  void write_bytes(std::uint64_t offset, ByteView data);

  // --- password lock ---
  // The lock engages at the next power cycle. Passwords cross the bus as-is.
  void set_password(ByteView password);
  void unlock(ByteView password);
  bool locked() const;
  bool password_set() const;
  void power_cycle();

  // --- RPMB ---
  void rpmb_program_key(const Key32& key);
  RpmbFrame rpmb_request(const RpmbFrame& request);
  // Raw wire path: the MAC is checked over the received bytes before parsing.
  Bytes rpmb_request_wire(ByteView wire);

  // --- imaging ---
  // Package level: the user area as the external interface exposes it.
  // Throws DeviceLocked while the lock is engaged.
  MediaImage dump();
  void restore(const MediaImage& image);
  // Die level: the complete internal NAND.
  MediaImage die_dump() const;
  void die_restore(const MediaImage& image);

  // --- logic analyser ---
  void enable_tap();
  void disable_tap();
  bool tap_enabled() const { return tap_ != nullptr; }
  // Throws TapNotEnabled.
  const TrafficLog& bus_tap() const;
  void clear_tap();

  const NandDevice& internal_nand() const { return nand_; }
  // Decodes the metadata page without logging; for inspection in tests and reports.
  EmmcMeta inspect_meta() const;

 private:
  class Tap;

  EmmcMeta load_meta();
  void store_meta(const EmmcMeta& meta);
  NandObserver* observer();
  void log_host(BusOp op, std::uint64_t address, ByteView payload);
  std::uint64_t user_base() const;
  std::uint64_t rpmb_base() const;
  void check_unlocked();
  void check_user_range(std::uint64_t offset, std::size_t length) const;
  RpmbFrame handle(const RpmbFrame& request, EmmcMeta& meta);

  EmmcConfig config_;
  NandDevice nand_;
  bool session_unlocked_ = true;  // volatile: cleared by power_cycle
  std::unique_ptr<Tap> tap_;
};

}  // namespace fvsim
