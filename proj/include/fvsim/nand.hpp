#pragma once

#include <cstdint>
#include <vector>

#include "fvsim/bytes.hpp"
#include "fvsim/media_image.hpp"

namespace fvsim {

struct NandGeometry {
  std::uint32_t page_size = 2048;
  std::uint32_t pages_per_block = 64;
  std::uint32_t block_count = 1024;

  std::uint64_t block_bytes() const {
    return static_cast<std::uint64_t>(page_size) * pages_per_block;
  }
  std::uint64_t page_count() const {
    return static_cast<std::uint64_t>(pages_per_block) * block_count;
  }
  std::uint64_t capacity() const { return block_bytes() * block_count; }

  bool operator==(const NandGeometry&) const = default;
};

// Receives every page-level operation a controller issues; used by bus taps.
class NandObserver {
 public:
  virtual ~NandObserver() = default;
  virtual void on_read(std::uint32_t block, std::uint32_t page, ByteView data) = 0;
  virtual void on_program(std::uint32_t block, std::uint32_t page, ByteView data) = 0;
  virtual void on_erase(std::uint32_t block) = 0;
};

// Raw parallel NAND: page program, block erase, no in-place rewrite.
class NandDevice {
 public:
  explicit NandDevice(NandGeometry geometry = {});

  const NandGeometry& geometry() const { return geometry_; }

  Bytes read_page(std::uint32_t block, std::uint32_t page) const;
  ByteView page_view(std::uint32_t block, std::uint32_t page) const;

  // Throws ProgramWithoutErase if the page was programmed since its last erase.
  void program_page(std::uint32_t block, std::uint32_t page, ByteView data);
  void erase_block(std::uint32_t block);

  bool is_programmed(std::uint32_t block, std::uint32_t page) const;
  std::uint32_t erase_count(std::uint32_t block) const;

  MediaImage dump(Provenance provenance = Provenance::Package) const;
  // Erase counters are physical wear and are not part of an image.
  void restore(const MediaImage& image);

  ByteView raw() const { return data_; }

 private:
  std::size_t page_index(std::uint32_t block, std::uint32_t page) const;

  NandGeometry geometry_;
  Bytes data_;
  Bytes programmed_;
  std::vector<std::uint32_t> erase_counts_;
};

// Byte-addressed access over a NAND array as a controller would perform it.
// Rewrites go erase-block by erase-block: read the untouched pages, erase,
// re-program. Pages that were blank and stay blank are left unprogrammed.
Bytes nand_read_bytes(const NandDevice& dev, std::uint64_t offset, std::size_t length,
                      NandObserver* observer = nullptr);
void nand_write_bytes(NandDevice& dev, std::uint64_t offset, ByteView data,
                      NandObserver* observer = nullptr);

}  // namespace fvsim
