#include "fvsim/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>

#include "fvsim/attack.hpp"
#include "fvsim/error.hpp"
#include "fvsim/persistence.hpp"
#include "fvsim/scenario.hpp"

namespace fvsim {

namespace fs = std::filesystem;

namespace {

struct Args {
  std::string workdir;
  std::string scenario_path;
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> password;
  std::optional<std::uint32_t> kdf_iterations;
  std::optional<std::string> geometry;
  std::optional<std::string> access;
  std::optional<std::string> dict;
  std::optional<std::uint32_t> margin;
  std::string attack;
  std::size_t dictionary_size = 24;
};

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(Errc::Io, "short write to " + path.string());
}

int cmd_provision(const Args& a, std::ostream& out) {
  Scenario s;
  if (!a.scenario_path.empty()) s = load_scenario(a.scenario_path);
  if (a.profile) s.profile = *a.profile;
  if (a.seed) s.seed = *a.seed;
  if (a.password) s.password = *a.password;
  if (a.kdf_iterations) s.kdf_iterations = *a.kdf_iterations;
  if (a.geometry) s.geometry = *a.geometry;
  if (a.margin) s.margin = *a.margin;
  if (a.access) s.access = *parse_access(*a.access);
  if (a.dict) s.dictionary_path = fs::absolute(*a.dict).string();
  if (s.profile.empty()) throw Error(Errc::BadScenario, "no profile given (--profile or --scenario)");
  if (s.password.empty()) throw Error(Errc::BadScenario, "no password given");
  s.validate();

  Drive drive = Drive::provision(find_profile(s.profile), to_bytes(s.password),
                                 s.provision_options());
  const Workdir dir{a.workdir};
  save_drive(dir, drive, s);
  out << "PROVISIONED profile=" << s.profile << " seed=" << s.seed
      << " remaining=" << drive.remaining_attempts() << '\n';
  for (const auto& e : fs::directory_iterator(dir.media_dir())) {
    out << "  " << fs::relative(e.path(), dir.root).generic_string() << '\n';
  }
  return kExitOk;
}

int cmd_unlock(const Args& a, std::ostream& out) {
  const Workdir dir{a.workdir};
  StoredDrive sd = load_drive(dir);
  if (sd.drive.state() == DriveState::Wiped) {
    out << "WIPED\n";
    return kExitOk;
  }
  const UnlockResult r = sd.drive.unlock(to_bytes(*a.password));
  if (r.unlocked) out << "UNLOCKED remaining=" << r.remaining << '\n';
  else if (r.wiped) out << "WIPED\n";
  else out << "FAILED remaining=" << r.remaining << '\n';
  save_drive(dir, sd.drive, sd.scenario);
  return kExitOk;
}

std::vector<Bytes> synthetic_wrong_passwords(std::size_t n) {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(to_bytes("wrong-" + std::to_string(i)));
  return out;
}

int cmd_attack(const Args& a, std::ostream& out) {
  const Workdir dir{a.workdir};
  StoredDrive sd = load_drive(dir);
  Scenario& s = sd.scenario;
  AttackerModel attacker = s.attacker();
  if (a.access) attacker.access = *parse_access(*a.access);
  if (a.dict) attacker.dictionary = load_dictionary(*a.dict);
  const MirrorOptions mirror{a.margin.value_or(s.margin)};
  Drive& drive = sd.drive;

  AttackReport report;
  if (a.attack == "mirror") {
    const auto candidates =
        attacker.dictionary.empty() ? synthetic_wrong_passwords(30) : attacker.dictionary;
    report = mirroring_attack(drive, attacker, candidates, mirror);
  } else if (a.attack == "mirror-brute") {
    report = mirrored_online_bruteforce(drive, attacker, attacker.dictionary, mirror);
  } else if (a.attack == "rpmb-rollback") {
    report = rpmb_rollback_probe(drive, attacker, mirror);
  } else if (a.attack == "brute") {
    report = offline_bruteforce(acquire_image(drive, attacker.access), attacker);
    report.profile = s.profile;
  } else {
    const Bytes victim = to_bytes(a.password.value_or(s.password));
    if (drive.profile().uses_emmc_lock) drive.media().emmc()->enable_tap();
    else if (drive.profile().has_secure_element()) drive.enable_se_tap();
    report = eavesdrop_unlock(drive, attacker, ByteView(victim));
  }

  const std::string text = report.serialize();
  write_file(dir.report_file(a.attack, attacker.access), text);
  save_drive(dir, drive, s);
  out << text;
  return report.succeeded ? kExitOk : kExitNotBroken;
}

int cmd_matrix(const Args& a, std::ostream& out) {
  MatrixOptions o;
  o.seed = a.seed.value_or(7);
  if (a.kdf_iterations) o.kdf_iterations = *a.kdf_iterations;
  if (a.geometry) o.geometry = *a.geometry;
  if (a.margin) o.margin = *a.margin;
  o.dictionary_size = a.dictionary_size;
  (void)media_config_by_name(o.geometry);

  const auto profiles = builtin_profiles();
  std::vector<AttackerModel> attackers(2);
  attackers[0].access = Access::Package;
  attackers[1].access = Access::Die;
  const VulnerabilityMatrix m = evaluate_all(profiles, attackers, o);

  const fs::path root = a.workdir.empty() ? fs::path(".") : fs::path(a.workdir);
  const std::string table = m.render_table();
  write_file(root / "matrix.json", m.to_json());
  write_file(root / "matrix.txt", table);
  out << table;
  return kExitOk;
}

int cmd_profiles(std::ostream& out) {
  const auto profiles = builtin_profiles();
  std::size_t w = 7;
  for (const auto& p : profiles) w = std::max(w, p.name.size());
  out << std::left << std::setw(static_cast<int>(w)) << "profile"
      << "  se   counter_store  key_store           media     models\n";
  for (const auto& p : profiles) {
    out << std::left << std::setw(static_cast<int>(w)) << p.name << "  "
        << std::setw(3) << (p.has_secure_element() ? "yes" : "no") << "  "
        << std::setw(13) << to_string(p.counter_store) << "  "
        << std::setw(18) << to_string(p.key_store) << "  "
        << std::setw(8) << to_string(p.media_kind) << "  " << p.models << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Encrypted flash drive security simulator", "fvsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Args a;
  const std::vector<std::string> accesses{"package", "die"};

  auto* prov = app.add_subcommand("provision", "Provision a drive into a workdir");
  prov->add_option("--workdir", a.workdir, "Working directory")->required();
  prov->add_option("--scenario", a.scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  prov->add_option("--profile", a.profile, "Builtin profile name");
  prov->add_option("--seed", a.seed, "Provisioning seed");
  prov->add_option("--password", a.password, "User password");
  prov->add_option("--kdf-iterations", a.kdf_iterations)->check(CLI::PositiveNumber);
  prov->add_option("--geometry", a.geometry)->check(CLI::IsMember({"default", "compact"}));
  prov->add_option("--access", a.access)->check(CLI::IsMember(accesses));
  prov->add_option("--dict", a.dict, "Dictionary file")->check(CLI::ExistingFile);
  prov->add_option("--margin", a.margin);

  auto* unl = app.add_subcommand("unlock", "Try a password against a provisioned drive");
  unl->add_option("--workdir", a.workdir)->required();
  unl->add_option("--password", a.password)->required();

  auto* att = app.add_subcommand("attack", "Run an attack against a provisioned drive");
  att->add_option("name", a.attack, "Attack")
      ->required()
      ->check(CLI::IsMember({"mirror", "rpmb-rollback", "brute", "mirror-brute", "eavesdrop"}));
  att->add_option("--workdir", a.workdir)->required();
  att->add_option("--access", a.access)->check(CLI::IsMember(accesses));
  att->add_option("--dict", a.dict, "Dictionary file")->check(CLI::ExistingFile);
  att->add_option("--margin", a.margin);
  att->add_option("--password", a.password, "Owner password typed during eavesdropping");

  auto* mat = app.add_subcommand("matrix", "Evaluate every profile against every attack");
  mat->add_option("--seed", a.seed);
  mat->add_option("--workdir", a.workdir, "Output directory (default: current)");
  mat->add_option("--kdf-iterations", a.kdf_iterations)->check(CLI::PositiveNumber);
  mat->add_option("--geometry", a.geometry)->check(CLI::IsMember({"default", "compact"}));
  mat->add_option("--margin", a.margin);
  mat->add_option("--dict-size", a.dictionary_size)->check(CLI::PositiveNumber);

  auto* prof = app.add_subcommand("profiles", "List builtin profiles");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prov->parsed()) return cmd_provision(a, out);
    if (unl->parsed()) return cmd_unlock(a, out);
    if (att->parsed()) return cmd_attack(a, out);
    if (mat->parsed()) return cmd_matrix(a, out);
    if (prof->parsed()) return cmd_profiles(out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitScenario;
  }
  return kExitUsage;
}

}  // namespace fvsim
