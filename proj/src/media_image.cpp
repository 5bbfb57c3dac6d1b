#include "fvsim/media_image.hpp"

#include <fstream>
#include <iterator>

#include "fvsim/crypto.hpp"
#include "fvsim/error.hpp"

namespace fvsim {

namespace {
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 1 + 4 + 4 + 4;
}

std::string_view to_string(Provenance p) {
  return p == Provenance::Die ? "die" : "package";
}

Bytes MediaImage::serialize() const {
  Bytes out;
  out.reserve(kHeaderSize + data.size() + programmed.size() / 8 + 33);
  append(out, view("FVMI"));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(provenance));
  out.push_back(static_cast<std::uint8_t>(kind));
  put_u32(out, unit_size);
  put_u32(out, units_per_group);
  put_u32(out, group_count);
  append(out, data);
  if (kind == ImageKind::Nand) {
    Bytes bitmap((programmed.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < programmed.size(); ++i) {
      if (programmed[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    append(out, bitmap);
  }
  Digest h = crypto::sha256(out);
  append(out, h);
  return out;
}

MediaImage MediaImage::parse(ByteView file) {
  if (file.size() < kHeaderSize + 32) throw Error(Errc::ImageCorrupt, "image truncated");
  const ByteView body = file.first(file.size() - 32);
  if (!crypto::equal(crypto::sha256(body), file.last(32))) {
    throw Error(Errc::ImageCorrupt, "integrity hash mismatch");
  }
  if (!std::equal(body.begin(), body.begin() + 4, "FVMI")) {
    throw Error(Errc::ImageCorrupt, "bad magic");
  }
  if (body[4] != kVersion) throw Error(Errc::ImageCorrupt, "unsupported version");
  if (body[5] > 1 || body[6] > 1) throw Error(Errc::ImageCorrupt, "bad provenance/kind");

  MediaImage img;
  img.provenance = static_cast<Provenance>(body[5]);
  img.kind = static_cast<ImageKind>(body[6]);
  img.unit_size = get_u32(body, 7);
  img.units_per_group = get_u32(body, 11);
  img.group_count = get_u32(body, 15);

  const std::uint64_t units = img.unit_count();
  const std::uint64_t raw = units * img.unit_size;
  const std::uint64_t bitmap = img.kind == ImageKind::Nand ? (units + 7) / 8 : 0;
  if (kHeaderSize + raw + bitmap != body.size()) {
    throw Error(Errc::ImageCorrupt, "length does not match geometry header");
  }
  img.data.assign(body.begin() + kHeaderSize, body.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + raw));
  if (img.kind == ImageKind::Nand) {
    img.programmed.resize(units);
    const std::size_t base = kHeaderSize + raw;
    for (std::uint64_t i = 0; i < units; ++i) {
      img.programmed[i] = (body[base + i / 8] >> (i % 8)) & 1u;
    }
  }
  return img;
}

void MediaImage::save(const std::filesystem::path& path) const {
  Bytes bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

MediaImage MediaImage::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace fvsim
