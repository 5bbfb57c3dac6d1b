#include "fvsim/block_device.hpp"

#include <cstring>

#include "fvsim/error.hpp"

namespace fvsim {

BlockDevice::BlockDevice(std::uint32_t block_size, std::uint32_t block_count)
    : block_size_(block_size), block_count_(block_count) {
  if (block_size == 0 || block_count == 0) {
    throw Error(Errc::GeometryMismatch, "block device geometry fields must be >= 1");
  }
  data_.assign(static_cast<std::size_t>(block_size) * block_count, 0);
}

Bytes BlockDevice::read(std::uint32_t block, std::uint32_t count) const {
  if (static_cast<std::uint64_t>(block) + count > block_count_) {
    throw Error(Errc::OutOfRange, "block read past end");
  }
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(block) * block_size_;
  return Bytes(first, first + static_cast<std::ptrdiff_t>(count) * block_size_);
}

void BlockDevice::write(std::uint32_t block, ByteView data) {
  if (data.size() % block_size_ != 0) {
    throw Error(Errc::SizeMismatch, "block write must be whole blocks");
  }
  if (static_cast<std::uint64_t>(block) + data.size() / block_size_ > block_count_) {
    throw Error(Errc::OutOfRange, "block write past end");
  }
  std::memcpy(data_.data() + static_cast<std::size_t>(block) * block_size_, data.data(), data.size());
}

Bytes BlockDevice::read_bytes(std::uint64_t offset, std::size_t length) const {
  if (offset + length > data_.size()) throw Error(Errc::OutOfRange, "byte read past end");
  return Bytes(data_.begin() + static_cast<std::ptrdiff_t>(offset),
               data_.begin() + static_cast<std::ptrdiff_t>(offset + length));
}

void BlockDevice::write_bytes(std::uint64_t offset, ByteView data) {
  if (offset + data.size() > data_.size()) throw Error(Errc::OutOfRange, "byte write past end");
  std::memcpy(data_.data() + offset, data.data(), data.size());
}

MediaImage BlockDevice::dump(Provenance provenance) const {
  MediaImage img;
  img.provenance = provenance;
  img.kind = ImageKind::Block;
  img.unit_size = block_size_;
  img.units_per_group = 1;
  img.group_count = block_count_;
  img.data = data_;
  return img;
}

void BlockDevice::restore(const MediaImage& image) {
  if (image.kind != ImageKind::Block || image.unit_size != block_size_ ||
      image.units_per_group != 1 || image.group_count != block_count_ ||
      image.data.size() != data_.size()) {
    throw Error(Errc::GeometryMismatch, "image does not match block device geometry");
  }
  data_ = image.data;
}

}  // namespace fvsim
