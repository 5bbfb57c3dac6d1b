#pragma once

#include <filesystem>
#include <string>

#include "fvsim/drive.hpp"
#include "fvsim/scenario.hpp"

namespace fvsim {

// Workdir layout:
//   drive.state          JSON: scenario, firmware state, internal stores
//   media/<name>.fvmi    main medium (die image for eMMC) and, for eMMC, the
//                        package-level user-area image
//   reports/<attack>-<access>.txt
struct Workdir {
  std::filesystem::path root;

  std::filesystem::path state_file() const { return root / "drive.state"; }
  std::filesystem::path media_dir() const { return root / "media"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }
  std::filesystem::path primary_image(MediaKind kind) const;
  std::filesystem::path report_file(std::string_view attack, Access access) const;
};

struct StoredDrive {
  Scenario scenario;
  Drive drive;
};

std::string snapshot_to_json(const DriveSnapshot& snap, const Scenario& scenario);

// Throws Io.
void save_drive(const Workdir& dir, Drive& drive, const Scenario& scenario);
// Throws Io, BadScenario, ImageCorrupt, UnknownProfile.
StoredDrive load_drive(const Workdir& dir);

}  // namespace fvsim
