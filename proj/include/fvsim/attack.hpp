#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fvsim/bytes.hpp"
#include "fvsim/drive.hpp"
#include "fvsim/media_image.hpp"

namespace fvsim {

// Package = the chip's external pins; Die = the NAND behind an eMMC controller
// after deprocessing or pad tapping. Die access includes everything Package gives.
enum class Access : std::uint8_t { Package, Die };

std::string_view to_string(Access a);
std::optional<Access> parse_access(std::string_view s);
inline Provenance to_provenance(Access a) {
  return a == Access::Die ? Provenance::Die : Provenance::Package;
}

struct AttackerModel {
  Access access = Access::Package;
  bool knows_blob_format = true;
  std::vector<Bytes> dictionary;
};

// One checked predicate of an attack run.
struct EvidenceEntry {
  std::string predicate;
  bool holds = false;
  std::string detail;

  bool operator==(const EvidenceEntry&) const = default;
};

struct AttackReport {
  std::string attack;
  std::string profile;
  Access access = Access::Package;
  bool succeeded = false;
  std::uint64_t attempts_consumed = 0;
  bool attempts_reinstated = false;
  std::optional<Bytes> recovered_password;
  std::vector<EvidenceEntry> evidence;

  // Stable line-oriented text; field order is fixed.
  std::string serialize() const;

  // First evidence entry with this predicate name, if any.
  const EvidenceEntry* find(std::string_view predicate) const;
};

struct MirrorOptions {
  // Attempts left unspent before each restore.
  std::uint32_t margin = 2;
};

// Image the drive's main medium at the attacker's level of access.
MediaImage acquire_image(Drive& drive, Access access);

// Snapshot the medium, spend up to (remaining - margin) wrong guesses, restore
// the snapshot, check whether the retry counter came back, repeat.
// Throws DriveNotLocked.
AttackReport mirroring_attack(Drive& drive, const AttackerModel& attacker,
                              std::span<const Bytes> candidates, MirrorOptions options = {});

// The mirroring loop run over a whole dictionary: online guessing without an
// effective attempt limit wherever mirroring works.
AttackReport mirrored_online_bruteforce(Drive& drive, const AttackerModel& attacker,
                                        std::span<const Bytes> dictionary,
                                        MirrorOptions options = {});

// Package level: replay captured RPMB write frames after restoring the user
// area. Die level: roll the whole internal NAND back.
// Throws ProfileNotRpmb, DriveNotLocked.
AttackReport rpmb_rollback_probe(Drive& drive, const AttackerModel& attacker,
                                 MirrorOptions options = {});

// Locate the key blob in an image and test attacker.dictionary against it.
// Throws FormatUnknown, BlobNotFound.
AttackReport offline_bruteforce(const MediaImage& image, const AttackerModel& attacker);

// eMMC-lock profiles: capture the lock password the firmware sends at boot
// (needs the eMMC tap attached). Secure-element profiles: watch a legitimate
// unlock by the owner on the controller/SE bus (needs the SE tap attached)
// and check whether the DEK or password ever crosses it in the clear.
// Throws TapNotEnabled, ProfileNotEmmcLock.
AttackReport eavesdrop_unlock(Drive& drive, const AttackerModel& attacker,
                              std::optional<ByteView> victim_password = std::nullopt);

// ---------------------------------------------------------------- matrix

enum class Verdict : std::uint8_t { Vulnerable, Resistant, ResistantByAssumption, NotApplicable };

std::string_view to_string(Verdict v);

struct MatrixRow {
  std::string profile;
  bool secure_element = false;
  std::string counter_store;
  std::string attack;
  Access access = Access::Package;
  Verdict verdict = Verdict::NotApplicable;
  std::string caveat;

  bool operator==(const MatrixRow&) const = default;
};

struct MatrixOptions {
  std::uint64_t seed = 7;
  std::uint32_t kdf_iterations = 1000;
  std::string geometry = "compact";  // "compact" or "default"
  std::size_t dictionary_size = 24;
  std::uint32_t margin = 2;
};

struct VulnerabilityMatrix {
  std::string tool_version;
  MatrixOptions options;
  std::vector<MatrixRow> rows;

  const MatrixRow* find(std::string_view profile, std::string_view attack, Access access) const;

  std::string render_table() const;
  // Machine-readable form; byte-identical for identical inputs.
  std::string to_json() const;
};

// Attack names in matrix/CLI order.
const std::vector<std::string>& attack_names();

// Per-profile scenario the matrix uses: password and a dictionary containing it.
struct MatrixScenario {
  Bytes password;
  std::vector<Bytes> dictionary;
  ProvisionOptions provision;
};
MatrixScenario matrix_scenario(const DriveProfile& profile, std::size_t profile_index,
                               const MatrixOptions& options);

MediaConfig media_config_by_name(std::string_view name);

VulnerabilityMatrix evaluate_all(std::span<const DriveProfile> profiles,
                                 std::span<const AttackerModel> attackers,
                                 const MatrixOptions& options = {});

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace fvsim
