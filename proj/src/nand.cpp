#include "fvsim/nand.hpp"

#include <algorithm>
#include <cstring>

#include "fvsim/error.hpp"

namespace fvsim {

namespace {

void check_geometry(const NandGeometry& g) {
  if (g.page_size == 0 || g.pages_per_block == 0 || g.block_count == 0) {
    throw Error(Errc::GeometryMismatch, "NAND geometry fields must be >= 1");
  }
}

bool all_ones(ByteView b) {
  return std::all_of(b.begin(), b.end(), [](std::uint8_t v) { return v == 0xFF; });
}

}  // namespace

NandDevice::NandDevice(NandGeometry geometry) : geometry_(geometry) {
  check_geometry(geometry_);
  data_.assign(geometry_.capacity(), 0xFF);
  programmed_.assign(geometry_.page_count(), 0);
  erase_counts_.assign(geometry_.block_count, 0);
}

std::size_t NandDevice::page_index(std::uint32_t block, std::uint32_t page) const {
  if (block >= geometry_.block_count || page >= geometry_.pages_per_block) {
    throw Error(Errc::OutOfRange, "NAND address (" + std::to_string(block) + "," +
                                      std::to_string(page) + ")");
  }
  return static_cast<std::size_t>(block) * geometry_.pages_per_block + page;
}

ByteView NandDevice::page_view(std::uint32_t block, std::uint32_t page) const {
  const std::size_t idx = page_index(block, page);
  return ByteView(data_).subspan(idx * geometry_.page_size, geometry_.page_size);
}

Bytes NandDevice::read_page(std::uint32_t block, std::uint32_t page) const {
  ByteView v = page_view(block, page);
  return Bytes(v.begin(), v.end());
}

void NandDevice::program_page(std::uint32_t block, std::uint32_t page, ByteView data) {
  const std::size_t idx = page_index(block, page);
  if (data.size() != geometry_.page_size) {
    throw Error(Errc::SizeMismatch, "page program needs exactly " +
                                        std::to_string(geometry_.page_size) + " bytes");
  }
  if (programmed_[idx]) {
    throw Error(Errc::ProgramWithoutErase,
                "page (" + std::to_string(block) + "," + std::to_string(page) + ")");
  }
  std::memcpy(data_.data() + idx * geometry_.page_size, data.data(), data.size());
  programmed_[idx] = 1;
}

void NandDevice::erase_block(std::uint32_t block) {
  if (block >= geometry_.block_count) {
    throw Error(Errc::OutOfRange, "NAND block " + std::to_string(block));
  }
  const std::size_t first = static_cast<std::size_t>(block) * geometry_.pages_per_block;
  std::fill_n(data_.begin() + static_cast<std::ptrdiff_t>(first * geometry_.page_size),
              geometry_.block_bytes(), 0xFF);
  std::fill_n(programmed_.begin() + static_cast<std::ptrdiff_t>(first), geometry_.pages_per_block, 0);
  ++erase_counts_[block];
}

bool NandDevice::is_programmed(std::uint32_t block, std::uint32_t page) const {
  return programmed_[page_index(block, page)] != 0;
}

std::uint32_t NandDevice::erase_count(std::uint32_t block) const {
  if (block >= geometry_.block_count) {
    throw Error(Errc::OutOfRange, "NAND block " + std::to_string(block));
  }
  return erase_counts_[block];
}

MediaImage NandDevice::dump(Provenance provenance) const {
  MediaImage img;
  img.provenance = provenance;
  img.kind = ImageKind::Nand;
  img.unit_size = geometry_.page_size;
  img.units_per_group = geometry_.pages_per_block;
  img.group_count = geometry_.block_count;
  img.data = data_;
  img.programmed = programmed_;
  return img;
}

void NandDevice::restore(const MediaImage& image) {
  if (image.kind != ImageKind::Nand || image.unit_size != geometry_.page_size ||
      image.units_per_group != geometry_.pages_per_block ||
      image.group_count != geometry_.block_count || image.data.size() != data_.size() ||
      image.programmed.size() != programmed_.size()) {
    throw Error(Errc::GeometryMismatch, "image does not match NAND geometry");
  }
  data_ = image.data;
  programmed_ = image.programmed;
}

Bytes nand_read_bytes(const NandDevice& dev, std::uint64_t offset, std::size_t length,
                      NandObserver* observer) {
  const NandGeometry& g = dev.geometry();
  if (offset + length > g.capacity()) throw Error(Errc::OutOfRange, "NAND byte range");
  Bytes out(length);
  std::size_t done = 0;
  while (done < length) {
    const std::uint64_t at = offset + done;
    const auto page_global = static_cast<std::uint32_t>(at / g.page_size);
    const std::uint32_t block = page_global / g.pages_per_block;
    const std::uint32_t page = page_global % g.pages_per_block;
    const std::size_t in_page = static_cast<std::size_t>(at % g.page_size);
    const std::size_t n = std::min<std::size_t>(g.page_size - in_page, length - done);
    ByteView pv = dev.page_view(block, page);
    if (observer != nullptr) observer->on_read(block, page, pv);
    std::memcpy(out.data() + done, pv.data() + in_page, n);
    done += n;
  }
  return out;
}

void nand_write_bytes(NandDevice& dev, std::uint64_t offset, ByteView data,
                      NandObserver* observer) {
  const NandGeometry& g = dev.geometry();
  if (offset + data.size() > g.capacity()) throw Error(Errc::OutOfRange, "NAND byte range");
  const std::uint64_t bb = g.block_bytes();
  std::size_t done = 0;
  Bytes block_buf(bb);
  std::vector<bool> was_programmed(g.pages_per_block);
  while (done < data.size()) {
    const std::uint64_t at = offset + done;
    const auto block = static_cast<std::uint32_t>(at / bb);
    const std::size_t in_block = static_cast<std::size_t>(at % bb);
    const std::size_t n = std::min<std::size_t>(bb - in_block, data.size() - done);
    const bool whole_block = (in_block == 0 && n == bb);

    for (std::uint32_t p = 0; p < g.pages_per_block; ++p) {
      was_programmed[p] = dev.is_programmed(block, p);
      const std::size_t page_lo = static_cast<std::size_t>(p) * g.page_size;
      const std::size_t page_hi = page_lo + g.page_size;
      const bool fully_replaced = whole_block || (page_lo >= in_block && page_hi <= in_block + n);
      if (!fully_replaced) {
        ByteView pv = dev.page_view(block, p);
        if (observer != nullptr && was_programmed[p]) observer->on_read(block, p, pv);
        std::memcpy(block_buf.data() + page_lo, pv.data(), g.page_size);
      }
    }
    std::memcpy(block_buf.data() + in_block, data.data() + done, n);

    dev.erase_block(block);
    if (observer != nullptr) observer->on_erase(block);
    for (std::uint32_t p = 0; p < g.pages_per_block; ++p) {
      ByteView pv = ByteView(block_buf).subspan(static_cast<std::size_t>(p) * g.page_size, g.page_size);
      if (!was_programmed[p] && all_ones(pv)) continue;
      dev.program_page(block, p, pv);
      if (observer != nullptr) observer->on_program(block, p, pv);
    }
    done += n;
  }
}

}  // namespace fvsim
