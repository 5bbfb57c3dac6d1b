#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fvsim/block_device.hpp"
#include "fvsim/bytes.hpp"
#include "fvsim/emmc.hpp"
#include "fvsim/key_blob.hpp"
#include "fvsim/media_image.hpp"
#include "fvsim/nand.hpp"
#include "fvsim/rng.hpp"
#include "fvsim/secure_element.hpp"
#include "fvsim/traffic.hpp"

namespace fvsim {

enum class CounterStore : std::uint8_t {
  SecureElement,
  NandUserArea,  // reserved region of a raw flash medium (parallel NAND or microSD)
  EmmcUserArea,
  EmmcRpmb,
  McuInternal,
  BatterySram,
};

enum class KeyStore : std::uint8_t { SecureElement, WrappedBlobOnMedia, BatterySram };

enum class MediaKind : std::uint8_t { Nand, BlockDev, Emmc };

std::string_view to_string(CounterStore s);
std::string_view to_string(KeyStore s);
std::string_view to_string(MediaKind k);
std::optional<CounterStore> parse_counter_store(std::string_view s);
std::optional<KeyStore> parse_key_store(std::string_view s);
std::optional<MediaKind> parse_media_kind(std::string_view s);

// Architecture template for one family of drives.
struct DriveProfile {
  std::string name;
  std::string models;  // example products of this family
  CounterStore counter_store = CounterStore::NandUserArea;
  KeyStore key_store = KeyStore::WrappedBlobOnMedia;
  MediaKind media_kind = MediaKind::Nand;
  bool uses_emmc_lock = false;
  bool uses_rpmb = false;
  // The user volume covers only capacity / divisor of the medium.
  std::uint32_t capacity_divisor = 1;
  bool erase_on_wipe = false;

  bool has_secure_element() const {
    return counter_store == CounterStore::SecureElement || key_store == KeyStore::SecureElement;
  }
  // Throws ProfileMediaMismatch.
  void validate() const;

  bool operator==(const DriveProfile&) const = default;
};

// The families distilled from the teardown table plus two hardened variants.
std::vector<DriveProfile> builtin_profiles();
// Throws UnknownProfile.
DriveProfile find_profile(std::string_view name);

struct MediaConfig {
  NandGeometry nand{2048, 64, 1024};
  std::uint32_t block_size = 512;
  std::uint32_t block_count = 262144;
  EmmcConfig emmc{};

  // 128 MiB raw NAND / microSD, 64 MiB eMMC user area.
  static MediaConfig desk_default() { return {}; }
  // 2 MiB of everything; for unit tests and the attack matrix.
  static MediaConfig compact();

  bool operator==(const MediaConfig&) const = default;
};

struct ProvisionOptions {
  std::uint64_t seed = 0;
  std::uint32_t kdf_iterations = 10000;
  std::uint32_t max_retries = 10;
  MediaConfig media = MediaConfig::desk_default();

  bool operator==(const ProvisionOptions&) const = default;
};

// Persisted retry state: remaining:u32 | epoch:u32 | reserved:u32 | tag[32].
// tag = HMAC(device_secret, first 12 bytes). The device secret sits right after
// the record in the same store, so a whole-store rollback stays consistent.
struct CounterRecord {
  static constexpr std::size_t kSize = 44;
  static constexpr std::size_t kSlotSize = kSize + 32;

  std::uint32_t remaining = 0;
  std::uint32_t epoch = 0;
  std::uint32_t reserved = 0;
  Digest tag{};

  static CounterRecord make(std::uint32_t remaining, std::uint32_t epoch, const Key32& secret);
  Bytes serialize() const;
  static CounterRecord parse(ByteView bytes);
  bool tag_valid(const Key32& secret) const;

  bool operator==(const CounterRecord&) const = default;
};

// Byte offsets of the firmware's fixed regions on the main medium.
struct MediaLayout {
  std::uint64_t keyblob_offset = 0;
  std::uint64_t counter_offset = 0;
  std::uint64_t volume_offset = 0;
  std::uint64_t volume_sectors = 0;
};

// The flash media soldered to the drive's board.
class DriveMedia {
 public:
  using Device = std::variant<NandDevice, BlockDevice, EmmcDevice>;

  static DriveMedia create(MediaKind kind, const MediaConfig& config);
  explicit DriveMedia(Device device) : device_(std::move(device)) {}

  MediaKind kind() const;
  std::uint64_t capacity() const;
  // Rewrite granularity the firmware aligns its regions to.
  std::uint64_t region_unit() const;

  Bytes read_bytes(std::uint64_t offset, std::size_t length);
  void write_bytes(std::uint64_t offset, ByteView data);

  // What an attacker with the given reach can image. For raw NAND and
  // microSD the package already exposes everything.
  MediaImage dump(Provenance level);
  void restore(const MediaImage& image);

  NandDevice* nand() { return std::get_if<NandDevice>(&device_); }
  BlockDevice* block_device() { return std::get_if<BlockDevice>(&device_); }
  EmmcDevice* emmc() { return std::get_if<EmmcDevice>(&device_); }
  const EmmcDevice* emmc() const { return std::get_if<EmmcDevice>(&device_); }

  // Complete persistent content (die image for eMMC) and its inverse.
  MediaImage persist_image() const;
  static DriveMedia from_persist_image(MediaKind kind, const MediaConfig& config,
                                       const MediaImage& image);

 private:
  Device device_;
};

enum class DriveState : std::uint8_t { Unprovisioned, Locked, Unlocked, Wiped };

std::string_view to_string(DriveState s);

struct UnlockResult {
  bool unlocked = false;
  std::uint32_t remaining = 0;
  bool wiped = false;
};

using InternalStore = std::map<std::string, Bytes>;

// Everything except the main medium needed to resume a drive.
struct DriveSnapshot {
  DriveProfile profile;
  ProvisionOptions options;
  DriveState state = DriveState::Unprovisioned;
  InternalStore mcu_store;
  InternalStore sram;
  std::optional<SecureElementState> secure_element;
  std::string rng_state;
};

// Controller firmware state machine bound to its media.
class Drive {
 public:
  // Throws ProfileMediaMismatch.
  static Drive provision(const DriveProfile& profile, ByteView password,
                         const ProvisionOptions& options);

  static Drive resume(DriveSnapshot snapshot, DriveMedia media);
  DriveSnapshot snapshot() const;

  const DriveProfile& profile() const { return profile_; }
  const ProvisionOptions& options() const { return options_; }
  DriveState state() const { return state_; }
  const MediaLayout& layout() const { return layout_; }
  std::uint32_t max_retries() const { return options_.max_retries; }

  // Throws AlreadyUnlocked, DriveWiped.
  UnlockResult unlock(ByteView password);

  // Attempts left as the drive reports them to the user.
  std::uint32_t remaining_attempts();

  // Throws IntegrityTagMismatch (non-SE stores) or RpmbWriteRejected.
  CounterRecord persist_counter(std::uint32_t remaining);
  CounterRecord load_counter();

  // Throws DriveLockedOrWiped, OutOfRange.
  Bytes read_user(std::uint64_t sector, std::uint32_t count);
  void write_user(std::uint64_t sector, ByteView data);
  std::uint64_t volume_sectors() const { return layout_.volume_sectors; }

  void wipe();
  void power_cycle(bool battery_present = true);

  DriveMedia& media() { return media_; }
  const DriveMedia& media() const { return media_; }
  SecureElement* secure_element() { return se_ ? &*se_ : nullptr; }
  const InternalStore& mcu_store() const { return mcu_store_; }
  const InternalStore& sram() const { return sram_; }

  // Logic analyser on the controller <-> secure element bus.
  void enable_se_tap() { if (!se_tap_) se_tap_.emplace(); }
  const TrafficLog& se_bus_tap() const;

  // The volatile DEK while Unlocked. Instrumentation for the attack harness's
  // ground-truth checks; firmware paths never expose it.
  std::optional<Key32> active_dek() const { return dek_; }

 private:
  Drive(DriveProfile profile, ProvisionOptions options, DriveMedia media);

  UnlockResult unlock_via_secure_element(ByteView password);
  UnlockResult unlock_via_blob(ByteView password);
  std::optional<KeyBlob> read_blob();
  Bytes read_counter_slot();
  void write_counter_slot(ByteView slot);
  Key32 counter_secret();
  RpmbHost rpmb_host() const;
  void boot_media();
  void check_volume_range(std::uint64_t sector, std::uint64_t count) const;

  DriveProfile profile_;
  ProvisionOptions options_;
  DriveMedia media_;
  MediaLayout layout_;
  DriveState state_ = DriveState::Unprovisioned;
  std::optional<SecureElement> se_;
  InternalStore mcu_store_;
  InternalStore sram_;
  DeterministicRng rng_;
  std::optional<Key32> dek_;
  std::optional<std::uint32_t> rpmb_counter_cache_;
  std::optional<TrafficLog> se_tap_;
};

}  // namespace fvsim
