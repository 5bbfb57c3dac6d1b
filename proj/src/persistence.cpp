#include "fvsim/persistence.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fvsim/error.hpp"

namespace fvsim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kStateVersion = 1;

ordered_json store_to_json(const InternalStore& s) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : s) j[k] = to_hex(v);
  return j;
}

InternalStore store_from_json(const ordered_json& j) {
  InternalStore s;
  for (const auto& [k, v] : j.items()) s[k] = from_hex(v.get<std::string>());
  return s;
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(const std::string& hex) {
  const Bytes b = from_hex(hex);
  if (b.size() != N) throw Error(Errc::BadScenario, "wrong field length in drive.state");
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

ordered_json se_to_json(const SecureElementState& se) {
  ordered_json j;
  j["pairing_secret"] = to_hex(se.pairing_secret);
  j["max_retries"] = se.config.max_retries;
  j["kdf_iterations"] = se.config.kdf_iterations;
  j["provisioned"] = se.provisioned;
  j["destroyed"] = se.destroyed;
  j["retry_counter"] = se.retry_counter;
  j["blob"] = {{"salt", to_hex(se.blob.salt)},
               {"kdf_iterations", se.blob.kdf_iterations},
               {"wrapped_dek", to_hex(se.blob.wrapped_dek)},
               {"verifier", to_hex(se.blob.verifier)}};
  j["rng_state"] = se.rng_state;
  return j;
}

SecureElementState se_from_json(const ordered_json& j) {
  SecureElementState se;
  se.pairing_secret = fixed_from_hex<32>(j.at("pairing_secret").get<std::string>());
  se.config.max_retries = j.at("max_retries").get<std::uint32_t>();
  se.config.kdf_iterations = j.at("kdf_iterations").get<std::uint32_t>();
  se.provisioned = j.at("provisioned").get<bool>();
  se.destroyed = j.at("destroyed").get<bool>();
  se.retry_counter = j.at("retry_counter").get<std::uint32_t>();
  const auto& b = j.at("blob");
  se.blob.salt = fixed_from_hex<16>(b.at("salt").get<std::string>());
  se.blob.kdf_iterations = b.at("kdf_iterations").get<std::uint32_t>();
  se.blob.wrapped_dek = from_hex(b.at("wrapped_dek").get<std::string>());
  se.blob.verifier = fixed_from_hex<32>(b.at("verifier").get<std::string>());
  se.rng_state = j.at("rng_state").get<std::string>();
  return se;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

fs::path Workdir::primary_image(MediaKind kind) const {
  switch (kind) {
    case MediaKind::Nand: return media_dir() / "nand.fvmi";
    case MediaKind::BlockDev: return media_dir() / "block.fvmi";
    case MediaKind::Emmc: return media_dir() / "emmc-die.fvmi";
  }
  return media_dir() / "media.fvmi";
}

fs::path Workdir::report_file(std::string_view attack, Access access) const {
  return reports_dir() / (std::string(attack) + "-" + std::string(to_string(access)) + ".txt");
}

std::string snapshot_to_json(const DriveSnapshot& snap, const Scenario& scenario) {
  ordered_json j;
  j["format"] = "fvsim-drive-state";
  j["version"] = kStateVersion;
  j["scenario"] = ordered_json::parse(scenario_to_json(scenario));
  j["state"] = std::string(to_string(snap.state));
  j["mcu_store"] = store_to_json(snap.mcu_store);
  j["sram"] = store_to_json(snap.sram);
  j["secure_element"] =
      snap.secure_element ? se_to_json(*snap.secure_element) : ordered_json(nullptr);
  j["rng_state"] = snap.rng_state;
  return j.dump(2) + "\n";
}

void save_drive(const Workdir& dir, Drive& drive, const Scenario& scenario) {
  std::error_code ec;
  fs::create_directories(dir.media_dir(), ec);
  if (ec) throw Error(Errc::Io, "cannot create " + dir.media_dir().string());
  drive.media().persist_image().save(dir.primary_image(drive.profile().media_kind));
  if (drive.profile().media_kind == MediaKind::Emmc) {
    const fs::path user = dir.media_dir() / "emmc-userarea.fvmi";
    // The package view is only readable while the controller has the chip open.
    if (!drive.media().emmc()->locked()) drive.media().dump(Provenance::Package).save(user);
    else fs::remove(user, ec);
  }
  write_text(dir.state_file(), snapshot_to_json(drive.snapshot(), scenario));
}

StoredDrive load_drive(const Workdir& dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text(dir.state_file()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadScenario, std::string("drive.state: ") + e.what());
  }
  try {
    if (j.at("format") != "fvsim-drive-state" || j.at("version") != kStateVersion) {
      throw Error(Errc::BadScenario, "drive.state: unsupported format");
    }
    Scenario scenario = parse_scenario(j.at("scenario").dump());
    scenario.validate();
    DriveSnapshot snap;
    snap.profile = find_profile(scenario.profile);
    snap.options = scenario.provision_options();
    const std::string state = j.at("state").get<std::string>();
    if (state == "Locked") snap.state = DriveState::Locked;
    else if (state == "Wiped") snap.state = DriveState::Wiped;
    else throw Error(Errc::BadScenario, "drive.state: unexpected state " + state);
    snap.mcu_store = store_from_json(j.at("mcu_store"));
    snap.sram = store_from_json(j.at("sram"));
    if (!j.at("secure_element").is_null()) snap.secure_element = se_from_json(j.at("secure_element"));
    snap.rng_state = j.at("rng_state").get<std::string>();

    const MediaKind kind = snap.profile.media_kind;
    const MediaImage image = MediaImage::load(dir.primary_image(kind));
    DriveMedia media = DriveMedia::from_persist_image(kind, snap.options.media, image);
    Drive drive = Drive::resume(std::move(snap), std::move(media));
    return {std::move(scenario), std::move(drive)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadScenario, std::string("drive.state: ") + e.what());
  }
}

}  // namespace fvsim
