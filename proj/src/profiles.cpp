#include <array>

#include "fvsim/drive.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<E, N>& all) {
  for (E e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

constexpr std::array kCounterStores = {CounterStore::SecureElement, CounterStore::NandUserArea,
                                       CounterStore::EmmcUserArea,  CounterStore::EmmcRpmb,
                                       CounterStore::McuInternal,   CounterStore::BatterySram};
constexpr std::array kKeyStores = {KeyStore::SecureElement, KeyStore::WrappedBlobOnMedia,
                                   KeyStore::BatterySram};
constexpr std::array kMediaKinds = {MediaKind::Nand, MediaKind::BlockDev, MediaKind::Emmc};

}  // namespace

std::string_view to_string(CounterStore s) {
  switch (s) {
    case CounterStore::SecureElement: return "SecureElement";
    case CounterStore::NandUserArea: return "NandUserArea";
    case CounterStore::EmmcUserArea: return "EmmcUserArea";
    case CounterStore::EmmcRpmb: return "EmmcRpmb";
    case CounterStore::McuInternal: return "McuInternal";
    case CounterStore::BatterySram: return "BatterySram";
  }
  return "?";
}

std::string_view to_string(KeyStore s) {
  switch (s) {
    case KeyStore::SecureElement: return "SecureElement";
    case KeyStore::WrappedBlobOnMedia: return "WrappedBlobOnMedia";
    case KeyStore::BatterySram: return "BatterySram";
  }
  return "?";
}

std::string_view to_string(MediaKind k) {
  switch (k) {
    case MediaKind::Nand: return "Nand";
    case MediaKind::BlockDev: return "BlockDev";
    case MediaKind::Emmc: return "Emmc";
  }
  return "?";
}

std::optional<CounterStore> parse_counter_store(std::string_view s) {
  return parse_enum(s, kCounterStores);
}
std::optional<KeyStore> parse_key_store(std::string_view s) { return parse_enum(s, kKeyStores); }
std::optional<MediaKind> parse_media_kind(std::string_view s) {
  return parse_enum(s, kMediaKinds);
}

void DriveProfile::validate() const {
  auto fail = [this](const std::string& why) {
    throw Error(Errc::ProfileMediaMismatch, name + ": " + why);
  };
  const bool emmc = media_kind == MediaKind::Emmc;
  if (counter_store == CounterStore::NandUserArea && emmc) {
    fail("raw-flash counter store needs NAND or microSD media");
  }
  if ((counter_store == CounterStore::EmmcUserArea || counter_store == CounterStore::EmmcRpmb) &&
      !emmc) {
    fail("eMMC counter store needs eMMC media");
  }
  if ((uses_emmc_lock || uses_rpmb) && !emmc) fail("eMMC security features need eMMC media");
  if (counter_store == CounterStore::EmmcRpmb && !uses_rpmb) fail("RPMB counter without RPMB");
  if ((counter_store == CounterStore::SecureElement) != (key_store == KeyStore::SecureElement)) {
    fail("a secure element holds both the key and the counter");
  }
  if (capacity_divisor == 0) fail("capacity divisor must be >= 1");
}

std::vector<DriveProfile> builtin_profiles() {
  std::vector<DriveProfile> out;
  auto add = [&out](std::string name, std::string models, CounterStore c, KeyStore k,
                    MediaKind m) -> DriveProfile& {
    DriveProfile p;
    p.name = std::move(name);
    p.models = std::move(models);
    p.counter_store = c;
    p.key_store = k;
    p.media_kind = m;
    out.push_back(std::move(p));
    return out.back();
  };

  add("SE_NAND", "IronKey D2, S200, D250", CounterStore::SecureElement, KeyStore::SecureElement,
      MediaKind::Nand);
  add("SE_EMMC", "IronKey S1000, Datashur Pro2", CounterStore::SecureElement,
      KeyStore::SecureElement, MediaKind::Emmc);
  add("NAND_COUNTER", "IronKey D80", CounterStore::NandUserArea, KeyStore::WrappedBlobOnMedia,
      MediaKind::Nand);
  add("BLOCKDEV_COUNTER", "IronKey F150, Stealth M200", CounterStore::NandUserArea,
      KeyStore::WrappedBlobOnMedia, MediaKind::BlockDev);
  // 16 GB eMMC of which only the first 4 GB of ROM1 hold data.
  add("EMMC_USERAREA_COUNTER", "DataTraveler DT4000G2, IronKey D300, D300S",
      CounterStore::EmmcUserArea, KeyStore::WrappedBlobOnMedia, MediaKind::Emmc)
      .capacity_divisor = 4;
  add("MCU_COUNTER", "DataTraveler DT2000, Datashur, Datashur Pro", CounterStore::McuInternal,
      KeyStore::WrappedBlobOnMedia, MediaKind::Emmc);

  DriveProfile& rpmb = add("EMMC_RPMB_COUNTER", "hardened: eMMC lock + RPMB counter",
                           CounterStore::EmmcRpmb, KeyStore::WrappedBlobOnMedia, MediaKind::Emmc);
  rpmb.uses_rpmb = true;
  rpmb.uses_emmc_lock = true;

  add("BATTERY_SRAM_KEY", "hardened: key and counter in battery-backed SRAM",
      CounterStore::BatterySram, KeyStore::BatterySram, MediaKind::Emmc);
  return out;
}

DriveProfile find_profile(std::string_view name) {
  for (auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(Errc::UnknownProfile, std::string(name));
}

MediaConfig MediaConfig::compact() {
  MediaConfig c;
  c.nand = {2048, 64, 16};
  c.block_size = 512;
  c.block_count = 4096;
  c.emmc.user_blocks = 4096;
  return c;
}

}  // namespace fvsim
