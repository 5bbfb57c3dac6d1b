#pragma once

#include <cstdint>

#include "fvsim/bytes.hpp"
#include "fvsim/media_image.hpp"

namespace fvsim {

// microSD / serial flash as the host sees it: a flat, freely rewritable array
// of fixed-size blocks. The card's own controller hides erase semantics.
class BlockDevice {
 public:
  BlockDevice(std::uint32_t block_size, std::uint32_t block_count);

  std::uint32_t block_size() const { return block_size_; }
  std::uint32_t block_count() const { return block_count_; }
  std::uint64_t capacity() const { return data_.size(); }

  Bytes read(std::uint32_t block, std::uint32_t count) const;
  // data must be a whole number of blocks.
  void write(std::uint32_t block, ByteView data);

  Bytes read_bytes(std::uint64_t offset, std::size_t length) const;
  void write_bytes(std::uint64_t offset, ByteView data);

  MediaImage dump(Provenance provenance = Provenance::Package) const;
  void restore(const MediaImage& image);

  ByteView raw() const { return data_; }

 private:
  std::uint32_t block_size_;
  std::uint32_t block_count_;
  Bytes data_;
};

}  // namespace fvsim
