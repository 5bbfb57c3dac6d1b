#include "fvsim/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fvsim/error.hpp"

namespace fvsim {

namespace {

using nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

template <typename T>
void take(const ordered_json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadScenario, std::string(key) + ": " + e.what());
  }
}

}  // namespace

void Scenario::validate() const {
  find_profile(profile).validate();
  if (kdf_iterations == 0 || max_retries == 0) {
    throw Error(Errc::BadScenario, "kdf_iterations and max_retries must be >= 1");
  }
  (void)media();
}

MediaConfig Scenario::media() const {
  MediaConfig m = media_config_by_name(geometry);
  if (nand) {
    if (nand->page_size == 0 || nand->pages_per_block == 0 || nand->block_count == 0) {
      throw Error(Errc::BadScenario, "nand geometry fields must be >= 1");
    }
    m.nand = *nand;
    m.emmc.page_size = nand->page_size;
    m.emmc.pages_per_block = nand->pages_per_block;
  }
  if (block_count) m.block_count = *block_count;
  if (emmc_user_blocks) m.emmc.user_blocks = *emmc_user_blocks;
  return m;
}

ProvisionOptions Scenario::provision_options() const {
  ProvisionOptions o;
  o.seed = seed;
  o.kdf_iterations = kdf_iterations;
  o.max_retries = max_retries;
  o.media = media();
  return o;
}

AttackerModel Scenario::attacker() const {
  AttackerModel a;
  a.access = access;
  a.knows_blob_format = knows_blob_format;
  if (!dictionary_path.empty()) a.dictionary = load_dictionary(dictionary_path);
  return a;
}

Scenario parse_scenario(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadScenario, e.what());
  }
  if (!j.is_object()) throw Error(Errc::BadScenario, "scenario must be an object");
  Scenario s;
  take(j, "profile", s.profile);
  take(j, "seed", s.seed);
  take(j, "password", s.password);
  take(j, "kdf_iterations", s.kdf_iterations);
  take(j, "max_retries", s.max_retries);
  take(j, "geometry", s.geometry);
  take(j, "dictionary_path", s.dictionary_path);
  take(j, "margin", s.margin);
  if (j.contains("nand")) {
    NandGeometry g;
    const auto& n = j.at("nand");
    take(n, "page_size", g.page_size);
    take(n, "pages_per_block", g.pages_per_block);
    take(n, "block_count", g.block_count);
    s.nand = g;
  }
  if (j.contains("block_count")) {
    std::uint32_t v = 0;
    take(j, "block_count", v);
    s.block_count = v;
  }
  if (j.contains("emmc_user_blocks")) {
    std::uint32_t v = 0;
    take(j, "emmc_user_blocks", v);
    s.emmc_user_blocks = v;
  }
  if (j.contains("attacker")) {
    const auto& a = j.at("attacker");
    std::string access = "package";
    take(a, "access", access);
    auto parsed = parse_access(access);
    if (!parsed) throw Error(Errc::BadScenario, "access must be package or die");
    s.access = *parsed;
    take(a, "knows_blob_format", s.knows_blob_format);
  }
  if (s.profile.empty()) throw Error(Errc::BadScenario, "profile missing");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(read_file(path));
  if (!s.dictionary_path.empty()) {
    std::filesystem::path d(s.dictionary_path);
    if (d.is_relative()) s.dictionary_path = (path.parent_path() / d).string();
  }
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["profile"] = s.profile;
  j["seed"] = s.seed;
  j["password"] = s.password;
  j["kdf_iterations"] = s.kdf_iterations;
  j["max_retries"] = s.max_retries;
  j["geometry"] = s.geometry;
  if (s.nand) {
    j["nand"] = {{"page_size", s.nand->page_size},
                 {"pages_per_block", s.nand->pages_per_block},
                 {"block_count", s.nand->block_count}};
  }
  if (s.block_count) j["block_count"] = *s.block_count;
  if (s.emmc_user_blocks) j["emmc_user_blocks"] = *s.emmc_user_blocks;
  j["attacker"] = {{"access", std::string(to_string(s.access))},
                   {"knows_blob_format", s.knows_blob_format}};
  j["dictionary_path"] = s.dictionary_path;
  j["margin"] = s.margin;
  return j.dump(2);
}

std::vector<Bytes> parse_dictionary(std::string_view text) {
  std::vector<Bytes> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto word = text.substr(pos, end - pos);
    out.emplace_back(word.begin(), word.end());
    pos = end + 1;
  }
  return out;
}

std::vector<Bytes> load_dictionary(const std::filesystem::path& path) {
  return parse_dictionary(read_file(path));
}

}  // namespace fvsim
