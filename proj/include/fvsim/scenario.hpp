#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvsim/attack.hpp"
#include "fvsim/drive.hpp"

namespace fvsim {

// Inputs for one provisioned drive plus the attacker configuration used against it.
struct Scenario {
  std::string profile;
  std::uint64_t seed = 0;
  std::string password;
  std::uint32_t kdf_iterations = 10000;
  std::uint32_t max_retries = 10;
  std::string geometry = "default";
  // Optional per-field overrides applied on top of the named geometry.
  std::optional<NandGeometry> nand;
  std::optional<std::uint32_t> block_count;
  std::optional<std::uint32_t> emmc_user_blocks;
  Access access = Access::Package;
  bool knows_blob_format = true;
  std::string dictionary_path;
  std::uint32_t margin = 2;

  // Throws UnknownProfile, BadScenario.
  void validate() const;
  MediaConfig media() const;
  ProvisionOptions provision_options() const;
  AttackerModel attacker() const;  // dictionary loaded from dictionary_path if set
};

// Throws BadScenario on malformed input, Io on unreadable files.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

// One password per line, bytes kept as-is apart from the line break.
std::vector<Bytes> parse_dictionary(std::string_view text);
std::vector<Bytes> load_dictionary(const std::filesystem::path& path);

}  // namespace fvsim
