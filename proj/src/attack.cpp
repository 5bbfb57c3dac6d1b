#include "fvsim/attack.hpp"

#include <sstream>

#include "fvsim/error.hpp"

namespace fvsim {

namespace {

void add(AttackReport& r, std::string predicate, bool holds, std::string detail) {
  r.evidence.push_back({std::move(predicate), holds, std::move(detail)});
}

AttackReport start(std::string attack, const Drive& drive, const AttackerModel& attacker) {
  AttackReport r;
  r.attack = std::move(attack);
  r.profile = drive.profile().name;
  r.access = attacker.access;
  return r;
}

void require_locked(const Drive& drive) {
  if (drive.state() != DriveState::Locked) {
    throw Error(Errc::DriveNotLocked, std::string(to_string(drive.state())));
  }
}

// Guesses for probes that only need to burn attempts.
Bytes probe_guess(std::size_t i) {
  std::string s = "\x01probe-" + std::to_string(i);
  return to_bytes(s);
}

AttackReport run_mirroring(std::string name, Drive& drive, const AttackerModel& attacker,
                           std::span<const Bytes> candidates, MirrorOptions options) {
  require_locked(drive);
  AttackReport r = start(std::move(name), drive, attacker);

  const MediaImage snapshot = acquire_image(drive, attacker.access);
  const std::uint32_t initial = drive.remaining_attempts();
  add(r, "snapshot_taken", true,
      "provenance=" + std::string(to_string(snapshot.provenance)) +
          " bytes=" + std::to_string(snapshot.data.size()) +
          " remaining=" + std::to_string(initial));

  std::size_t next = 0;
  std::uint32_t cycle = 0;
  bool any_restore = false;
  bool every_restore_reinstated = true;
  while (next < candidates.size()) {
    const std::uint32_t remaining = drive.remaining_attempts();
    const std::uint32_t budget = remaining > options.margin ? remaining - options.margin : 0;
    if (budget == 0) {
      add(r, "attempt_budget_available", false,
          "remaining=" + std::to_string(remaining) + " margin=" + std::to_string(options.margin));
      break;
    }
    ++cycle;
    std::uint32_t tried = 0;
    UnlockResult last{};
    while (tried < budget && next < candidates.size()) {
      const Bytes& guess = candidates[next++];
      last = drive.unlock(guess);
      if (last.unlocked) {
        r.recovered_password = guess;
        break;
      }
      ++tried;
      ++r.attempts_consumed;
      if (last.wiped) break;
    }
    add(r, "cycle_guesses", true,
        "cycle=" + std::to_string(cycle) + " failed=" + std::to_string(tried) +
            " remaining=" + std::to_string(r.recovered_password ? initial : last.remaining));

    if (r.recovered_password) {
      add(r, "password_found", true,
          "after " + std::to_string(r.attempts_consumed) + " failed attempts");
      // Leave the drive as found.
      drive.power_cycle(true);
      break;
    }
    if (drive.state() == DriveState::Wiped) {
      add(r, "drive_not_wiped", false, "wipe triggered in cycle " + std::to_string(cycle));
      every_restore_reinstated = false;
      break;
    }

    drive.media().restore(snapshot);
    drive.power_cycle(true);
    any_restore = true;
    const std::uint32_t after = drive.remaining_attempts();
    const bool reinstated = after == initial;
    add(r, "counter_reinstated", reinstated,
        "cycle=" + std::to_string(cycle) + " remaining=" + std::to_string(after) +
            " expected=" + std::to_string(initial));
    if (!reinstated) {
      every_restore_reinstated = false;
      break;
    }
  }

  r.attempts_reinstated = any_restore && every_restore_reinstated;
  const bool found_clean = r.recovered_password.has_value() && drive.state() != DriveState::Wiped;
  r.succeeded = r.attempts_reinstated || found_clean;
  if (drive.state() != DriveState::Wiped) add(r, "drive_not_wiped", true, "");
  return r;
}

}  // namespace

std::string_view to_string(Access a) { return a == Access::Die ? "die" : "package"; }

std::optional<Access> parse_access(std::string_view s) {
  if (s == "package") return Access::Package;
  if (s == "die") return Access::Die;
  return std::nullopt;
}

std::string AttackReport::serialize() const {
  std::ostringstream os;
  os << "attack: " << attack << '\n'
     << "profile: " << profile << '\n'
     << "access: " << to_string(access) << '\n'
     << "succeeded: " << (succeeded ? "true" : "false") << '\n'
     << "attempts_consumed: " << attempts_consumed << '\n'
     << "attempts_reinstated: " << (attempts_reinstated ? "true" : "false") << '\n'
     << "recovered_password: "
     << (recovered_password ? "\"" + escape_bytes(*recovered_password) + "\"" : std::string("-"))
     << '\n'
     << "evidence:\n";
  for (const auto& e : evidence) {
    os << "  [" << (e.holds ? 'x' : ' ') << "] " << e.predicate;
    if (!e.detail.empty()) os << ": " << e.detail;
    os << '\n';
  }
  return os.str();
}

const EvidenceEntry* AttackReport::find(std::string_view predicate) const {
  for (const auto& e : evidence) {
    if (e.predicate == predicate) return &e;
  }
  return nullptr;
}

MediaImage acquire_image(Drive& drive, Access access) {
  return drive.media().dump(to_provenance(access));
}

AttackReport mirroring_attack(Drive& drive, const AttackerModel& attacker,
                              std::span<const Bytes> candidates, MirrorOptions options) {
  return run_mirroring("mirror", drive, attacker, candidates, options);
}

AttackReport mirrored_online_bruteforce(Drive& drive, const AttackerModel& attacker,
                                        std::span<const Bytes> dictionary,
                                        MirrorOptions options) {
  AttackReport r = run_mirroring("mirror-brute", drive, attacker, dictionary, options);
  // Success here means the password itself came out.
  r.succeeded = r.recovered_password.has_value() && drive.state() != DriveState::Wiped;
  return r;
}

AttackReport rpmb_rollback_probe(Drive& drive, const AttackerModel& attacker,
                                 MirrorOptions options) {
  if (!drive.profile().uses_rpmb) throw Error(Errc::ProfileNotRpmb, drive.profile().name);
  require_locked(drive);
  AttackReport r = start("rpmb-rollback", drive, attacker);
  EmmcDevice& emmc = *drive.media().emmc();

  const std::uint32_t initial = drive.remaining_attempts();
  const std::uint32_t counter_before = emmc.inspect_meta().write_counter;
  const bool tap_was_on = emmc.tap_enabled();
  emmc.enable_tap();
  emmc.clear_tap();

  const MediaImage snapshot = acquire_image(drive, attacker.access);
  add(r, "snapshot_taken", true,
      "provenance=" + std::string(to_string(snapshot.provenance)) +
          " remaining=" + std::to_string(initial) +
          " write_counter=" + std::to_string(counter_before));

  const std::uint32_t burn = initial > options.margin ? initial - options.margin : 0;
  for (std::uint32_t i = 0; i < burn; ++i) {
    const Bytes guess =
        i < attacker.dictionary.size() ? attacker.dictionary[i] : probe_guess(i);
    if (drive.unlock(guess).unlocked) {
      r.recovered_password = guess;
      drive.power_cycle(true);
      break;
    }
    ++r.attempts_consumed;
  }
  const std::uint32_t advanced = emmc.inspect_meta().write_counter;
  add(r, "counter_advanced", advanced > counter_before,
      "remaining=" + std::to_string(drive.remaining_attempts()) +
          " write_counter=" + std::to_string(advanced));

  std::vector<Bytes> captured;
  for (const auto& t : emmc.bus_tap().entries()) {
    if (t.side != BusSide::Host || t.op != BusOp::RpmbRequest) continue;
    auto f = RpmbFrame::from_wire(t.payload);
    if (f && f->type == static_cast<std::uint8_t>(RpmbRequest::AuthWrite)) {
      captured.push_back(t.payload);
    }
  }

  drive.media().restore(snapshot);
  if (attacker.access == Access::Package) {
    std::size_t index = 0;
    for (const Bytes& wire : captured) {
      auto resp = RpmbFrame::from_wire(emmc.rpmb_request_wire(wire));
      const RpmbResult result = resp ? resp->result : RpmbResult::GeneralFailure;
      add(r, "replay_rejected", result == RpmbResult::CounterMismatch,
          "frame=" + std::to_string(index++) + " result=" + std::string(to_string(result)));
    }
  }
  drive.power_cycle(true);

  const std::uint32_t counter_after = emmc.inspect_meta().write_counter;
  add(r, "write_counter_rolled_back", counter_after < advanced,
      "before=" + std::to_string(advanced) + " after=" + std::to_string(counter_after));
  const std::uint32_t after = drive.remaining_attempts();
  r.attempts_reinstated = after == initial;
  add(r, "counter_reinstated", r.attempts_reinstated,
      "remaining=" + std::to_string(after) + " expected=" + std::to_string(initial));
  r.succeeded = r.attempts_reinstated;

  if (!tap_was_on) emmc.disable_tap();
  return r;
}

AttackReport offline_bruteforce(const MediaImage& image, const AttackerModel& attacker) {
  if (!attacker.knows_blob_format) throw Error(Errc::FormatUnknown);
  const auto offset = KeyBlob::find(image.data);
  if (!offset) throw Error(Errc::BlobNotFound);
  const KeyBlob blob = *KeyBlob::parse(ByteView(image.data).subspan(*offset));

  AttackReport r;
  r.attack = "brute";
  r.profile = "image";
  r.access = image.provenance == Provenance::Die ? Access::Die : Access::Package;
  add(r, "blob_located", true,
      "offset=" + std::to_string(*offset) +
          " kdf_iterations=" + std::to_string(blob.kdf_iterations));
  for (const Bytes& candidate : attacker.dictionary) {
    ++r.attempts_consumed;
    if (password_matches(blob, candidate)) {
      r.recovered_password = candidate;
      break;
    }
  }
  r.succeeded = r.recovered_password.has_value();
  add(r, "verifier_matched", r.succeeded,
      "kdf_evaluations=" + std::to_string(r.attempts_consumed) +
          " dictionary=" + std::to_string(attacker.dictionary.size()));
  return r;
}

AttackReport eavesdrop_unlock(Drive& drive, const AttackerModel& attacker,
                              std::optional<ByteView> victim_password) {
  const DriveProfile& profile = drive.profile();
  AttackReport r = start("eavesdrop", drive, attacker);

  if (profile.uses_emmc_lock) {
    EmmcDevice& emmc = *drive.media().emmc();
    if (!emmc.tap_enabled()) throw Error(Errc::TapNotEnabled);
    emmc.clear_tap();
    drive.power_cycle(true);

    std::optional<Bytes> captured;
    for (const auto& t : emmc.bus_tap().entries()) {
      if (t.side == BusSide::Host && t.op == BusOp::Unlock) captured = t.payload;
    }
    add(r, "unlock_command_captured", captured.has_value(),
        captured ? "bytes=" + std::to_string(captured->size()) : "no unlock on bus");
    if (captured) {
      // Confirm by opening a freshly locked chip with the captured bytes.
      emmc.power_cycle();
      bool opened = false;
      try {
        emmc.unlock(*captured);
        opened = true;
      } catch (const Error&) {
      }
      add(r, "captured_password_opens_lock", opened, "");
      if (opened) r.recovered_password = captured;
      drive.power_cycle(true);
    }
    r.succeeded = r.recovered_password.has_value();
    return r;
  }

  if (profile.has_secure_element()) {
    const TrafficLog& bus = drive.se_bus_tap();  // throws TapNotEnabled
    if (!victim_password) {
      throw Error(Errc::BadScenario, "secure-channel eavesdrop needs an owner unlock to observe");
    }
    require_locked(drive);
    const std::size_t before = bus.size();
    const UnlockResult u = drive.unlock(*victim_password);
    const auto dek = drive.active_dek();
    add(r, "owner_session_observed", u.unlocked,
        "messages=" + std::to_string(bus.size() - before));
    const bool dek_seen = dek && bus.contains(*dek);
    const bool password_seen = !victim_password->empty() && bus.contains(*victim_password);
    add(r, "raw_dek_on_bus", dek_seen, "");
    add(r, "password_on_bus", password_seen, "");
    if (password_seen) r.recovered_password = Bytes(victim_password->begin(), victim_password->end());
    r.succeeded = dek_seen || password_seen;
    if (drive.state() == DriveState::Unlocked) drive.power_cycle(true);
    return r;
  }

  throw Error(Errc::ProfileNotEmmcLock, profile.name);
}

}  // namespace fvsim
