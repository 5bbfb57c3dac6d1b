#pragma once

#include <cstdint>
#include <filesystem>

#include "fvsim/bytes.hpp"

namespace fvsim {

// Where an image was taken: at a chip's external interface, or from the NAND
// die behind an eMMC controller.
enum class Provenance : std::uint8_t { Package = 0, Die = 1 };

enum class ImageKind : std::uint8_t { Nand = 0, Block = 1 };

std::string_view to_string(Provenance p);

// Byte-exact snapshot of an attacker-reachable storage surface.
//
// File layout (little-endian):
//   "FVMI" | version:u8 | provenance:u8 | kind:u8 | unit_size:u32 |
//   units_per_group:u32 | group_count:u32 | raw bytes |
//   programmed bitmap (NAND only, LSB-first, one bit per page) | sha256
//
// For NAND images unit = page and group = erase block; block-device images
// use unit = block and units_per_group = 1.
struct MediaImage {
  static constexpr std::uint8_t kVersion = 1;

  Provenance provenance = Provenance::Package;
  ImageKind kind = ImageKind::Block;
  std::uint32_t unit_size = 0;
  std::uint32_t units_per_group = 1;
  std::uint32_t group_count = 0;
  Bytes data;
  Bytes programmed;  // one entry (0/1) per page, NAND only

  std::uint64_t unit_count() const {
    return static_cast<std::uint64_t>(units_per_group) * group_count;
  }

  Bytes serialize() const;
  static MediaImage parse(ByteView file);

  void save(const std::filesystem::path& path) const;
  static MediaImage load(const std::filesystem::path& path);

  bool operator==(const MediaImage&) const = default;
};

}  // namespace fvsim
