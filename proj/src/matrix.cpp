#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fvsim/attack.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {

struct Cell {
  Verdict verdict = Verdict::NotApplicable;
  std::string caveat;
};

std::vector<Bytes> wrong_candidates(std::size_t n) {
  std::vector<Bytes> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(to_bytes("wrong-" + std::to_string(i)));
  return out;
}

Cell vulnerable_if(bool v, std::string caveat = {}) {
  return {v ? Verdict::Vulnerable : Verdict::Resistant, std::move(caveat)};
}

Cell run_cell(const DriveProfile& profile, const std::string& attack, AttackerModel attacker,
              const MatrixScenario& sc, const MatrixOptions& options) {
  const MirrorOptions mirror{options.margin};
  if (attack == "se-silicon") {
    if (!profile.has_secure_element()) return {};
    return {Verdict::ResistantByAssumption,
            "chip-level attacks on the secure element are outside the model"};
  }
  if (attack == "rpmb-rollback" && !profile.uses_rpmb) return {};
  if (attack == "eavesdrop" && !profile.uses_emmc_lock && !profile.has_secure_element()) return {};

  if (attacker.dictionary.empty()) attacker.dictionary = sc.dictionary;
  Drive drive = Drive::provision(profile, sc.password, sc.provision);

  if (attack == "mirror") {
    const auto candidates = wrong_candidates(30);
    return vulnerable_if(mirroring_attack(drive, attacker, candidates, mirror).succeeded);
  }
  if (attack == "mirror-brute") {
    const auto r = mirrored_online_bruteforce(drive, attacker, attacker.dictionary, mirror);
    return vulnerable_if(r.succeeded);
  }
  if (attack == "rpmb-rollback") {
    return vulnerable_if(rpmb_rollback_probe(drive, attacker, mirror).succeeded);
  }
  if (attack == "brute") {
    if (!attacker.knows_blob_format) return {Verdict::Resistant, "blob format unknown"};
    try {
      const auto r = offline_bruteforce(acquire_image(drive, attacker.access), attacker);
      return vulnerable_if(r.succeeded, "password drawn from the dictionary");
    } catch (const Error& e) {
      if (e.code() != Errc::BlobNotFound) throw;
      return {Verdict::Resistant, "no key blob on dumpable media"};
    }
  }
  if (attack == "eavesdrop") {
    if (profile.uses_emmc_lock) {
      drive.media().emmc()->enable_tap();
      return vulnerable_if(eavesdrop_unlock(drive, attacker).succeeded);
    }
    drive.enable_se_tap();
    return vulnerable_if(eavesdrop_unlock(drive, attacker, ByteView(sc.password)).succeeded);
  }
  throw Error(Errc::BadScenario, "unknown attack " + attack);
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Vulnerable: return "VULNERABLE";
    case Verdict::Resistant: return "RESISTANT";
    case Verdict::ResistantByAssumption: return "RESISTANT-BY-ASSUMPTION";
    case Verdict::NotApplicable: return "N/A";
  }
  return "?";
}

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names{"mirror", "rpmb-rollback", "brute",
                                              "mirror-brute", "eavesdrop", "se-silicon"};
  return names;
}

MediaConfig media_config_by_name(std::string_view name) {
  if (name == "compact") return MediaConfig::compact();
  if (name == "default") return MediaConfig::desk_default();
  throw Error(Errc::BadScenario, "unknown geometry " + std::string(name));
}

MatrixScenario matrix_scenario(const DriveProfile& profile, std::size_t profile_index,
                               const MatrixOptions& options) {
  (void)profile;
  DeterministicRng rng(options.seed * 1000003ULL + profile_index);
  MatrixScenario sc;
  sc.password = to_bytes("pw-" + to_hex(rng.bytes(4)));
  const std::size_t n = std::max<std::size_t>(options.dictionary_size, 1);
  // Past the retry limit, so finding it online needs the limit to be defeated.
  const std::size_t floor = n > sc.provision.max_retries ? sc.provision.max_retries : 0;
  const std::size_t slot = floor + rng.next_u64() % (n - floor);
  for (std::size_t i = 0; i < n; ++i) {
    sc.dictionary.push_back(i == slot ? sc.password : to_bytes("word-" + std::to_string(i)));
  }
  sc.provision.seed = rng.next_u64();
  sc.provision.kdf_iterations = options.kdf_iterations;
  sc.provision.media = media_config_by_name(options.geometry);
  return sc;
}

VulnerabilityMatrix evaluate_all(std::span<const DriveProfile> profiles,
                                 std::span<const AttackerModel> attackers,
                                 const MatrixOptions& options) {
  VulnerabilityMatrix m;
  m.tool_version = std::string(kToolVersion);
  m.options = options;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const DriveProfile& p = profiles[i];
    const MatrixScenario sc = matrix_scenario(p, i, options);
    for (const auto& attack : attack_names()) {
      for (const auto& attacker : attackers) {
        const Cell c = run_cell(p, attack, attacker, sc, options);
        m.rows.push_back({p.name, p.has_secure_element(), std::string(to_string(p.counter_store)),
                          attack, attacker.access, c.verdict, c.caveat});
      }
    }
  }
  return m;
}

const MatrixRow* VulnerabilityMatrix::find(std::string_view profile, std::string_view attack,
                                           Access access) const {
  for (const auto& r : rows) {
    if (r.profile == profile && r.attack == attack && r.access == access) return &r;
  }
  return nullptr;
}

std::string VulnerabilityMatrix::render_table() const {
  const std::vector<std::string> head{"profile", "se", "counter_store", "attack",
                                      "access", "verdict", "caveat"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.profile, r.secure_element ? "yes" : "no", r.counter_store, r.attack,
                     std::string(to_string(r.access)), std::string(to_string(r.verdict)),
                     r.caveat});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  os << "fvsim " << tool_version << "  seed=" << options.seed << "  geometry=" << options.geometry
     << "  kdf_iterations=" << options.kdf_iterations << '\n';
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::ostringstream f;
      f << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      s += f.str();
      if (c + 1 < row.size()) s += "  ";
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    os << s << '\n';
  };
  line(head);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& row : cells) line(row);
  return os.str();
}

std::string VulnerabilityMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["seed"] = options.seed;
  j["geometry"] = options.geometry;
  j["kdf_iterations"] = options.kdf_iterations;
  j["dictionary_size"] = options.dictionary_size;
  j["margin"] = options.margin;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["profile"] = r.profile;
    o["secure_element"] = r.secure_element;
    o["counter_store"] = r.counter_store;
    o["attack"] = r.attack;
    o["access"] = std::string(to_string(r.access));
    o["verdict"] = std::string(to_string(r.verdict));
    o["caveat"] = r.caveat;
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace fvsim
