#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>

#include "fvsim/block_device.hpp"
#include "fvsim/error.hpp"
#include "fvsim/media_image.hpp"
#include "fvsim/nand.hpp"

using namespace fvsim;

namespace {

const NandGeometry kSmall{256, 4, 8};

Bytes filled(std::size_t n, std::uint8_t v) { return Bytes(n, v); }

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fvsim::Error thrown";
  return Errc::Io;
}

}  // namespace

TEST(Nand, FreshPageReadsAllOnes) {
  NandDevice dev(kSmall);
  EXPECT_EQ(dev.read_page(0, 0), filled(256, 0xFF));
  EXPECT_FALSE(dev.is_programmed(0, 0));
}

TEST(Nand, ProgramThenReadBack) {
  NandDevice dev(kSmall);
  Bytes p(256);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<std::uint8_t>(i * 3);
  dev.program_page(2, 1, p);
  EXPECT_EQ(dev.read_page(2, 1), p);
  EXPECT_TRUE(dev.is_programmed(2, 1));
}

TEST(Nand, EraseRestoresAllOnes) {
  NandDevice dev(kSmall);
  dev.program_page(0, 0, filled(256, 0));
  dev.erase_block(0);
  EXPECT_EQ(dev.read_page(0, 0), filled(256, 0xFF));
  EXPECT_FALSE(dev.is_programmed(0, 0));
}

TEST(Nand, ProgramZerosReadsZeros) {
  NandDevice dev(kSmall);
  dev.program_page(1, 3, filled(256, 0));
  EXPECT_EQ(dev.read_page(1, 3), filled(256, 0));
}

TEST(Nand, DoubleProgramRejected) {
  NandDevice dev(kSmall);
  dev.program_page(0, 0, filled(256, 1));
  EXPECT_EQ(code_of([&] { dev.program_page(0, 0, filled(256, 2)); }), Errc::ProgramWithoutErase);
  EXPECT_EQ(dev.read_page(0, 0), filled(256, 1));
}

TEST(Nand, ShortBufferRejected) {
  NandDevice dev(kSmall);
  EXPECT_EQ(code_of([&] { dev.program_page(0, 0, filled(255, 1)); }), Errc::SizeMismatch);
  EXPECT_FALSE(dev.is_programmed(0, 0));
}

TEST(Nand, EraseCountAndRange) {
  NandDevice dev(kSmall);
  dev.erase_block(0);
  dev.erase_block(0);
  EXPECT_EQ(dev.erase_count(0), 2u);
  EXPECT_EQ(dev.erase_count(1), 0u);
  EXPECT_EQ(code_of([&] { dev.erase_block(8); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([&] { (void)dev.read_page(0, 4); }), Errc::OutOfRange);
}

TEST(Nand, DumpFreshAndAfterProgram) {
  NandDevice dev(kSmall);
  const MediaImage fresh = dev.dump();
  EXPECT_EQ(fresh.provenance, Provenance::Package);
  EXPECT_EQ(fresh.data, filled(kSmall.capacity(), 0xFF));
  EXPECT_EQ(fresh.programmed, Bytes(kSmall.page_count(), 0));

  dev.program_page(3, 2, filled(256, 0x5A));
  const MediaImage after = dev.dump();
  std::size_t first = after.data.size(), last = 0;
  for (std::size_t i = 0; i < after.data.size(); ++i) {
    if (after.data[i] != fresh.data[i]) {
      first = std::min(first, i);
      last = i;
    }
  }
  const std::size_t page_off = (3 * 4 + 2) * 256;
  EXPECT_EQ(first, page_off);
  EXPECT_EQ(last, page_off + 255);
  EXPECT_NE(after, fresh);
}

TEST(Nand, RestoreRoundTrip) {
  NandDevice dev(kSmall);
  dev.program_page(0, 0, filled(256, 7));
  const MediaImage snap = dev.dump();
  dev.restore(snap);
  EXPECT_EQ(dev.dump(), snap);

  dev.erase_block(0);
  dev.program_page(5, 1, filled(256, 9));
  dev.restore(snap);
  EXPECT_EQ(dev.dump(), snap);
  // Programmed flags came back too.
  EXPECT_EQ(code_of([&] { dev.program_page(0, 0, filled(256, 1)); }), Errc::ProgramWithoutErase);
  dev.program_page(5, 1, filled(256, 1));
}

TEST(Nand, RestoreWrongGeometry) {
  NandDevice dev(kSmall);
  NandDevice other({512, 4, 8});
  EXPECT_EQ(code_of([&] { dev.restore(other.dump()); }), Errc::GeometryMismatch);
}

TEST(Nand, ByteWriteHelperRespectsDiscipline) {
  NandDevice dev(kSmall);
  Bytes data(300, 0x11);
  nand_write_bytes(dev, 100, data);
  EXPECT_EQ(nand_read_bytes(dev, 100, 300), data);
  Bytes more(50, 0x22);
  nand_write_bytes(dev, 120, more);
  Bytes expect = data;
  std::copy(more.begin(), more.end(), expect.begin() + 20);
  EXPECT_EQ(nand_read_bytes(dev, 100, 300), expect);
  EXPECT_GE(dev.erase_count(0), 1u);
}

// Random operation sequences checked against a plain map-based shadow model.
TEST(NandProperty, RandomSequencesMatchShadowModel) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    std::mt19937_64 rng(seed);
    NandDevice dev(kSmall);
    std::map<std::pair<std::uint32_t, std::uint32_t>, Bytes> shadow;
    std::vector<std::uint32_t> erases(kSmall.block_count, 0);
    for (int step = 0; step < 400; ++step) {
      const auto block = static_cast<std::uint32_t>(rng() % kSmall.block_count);
      const auto page = static_cast<std::uint32_t>(rng() % kSmall.pages_per_block);
      switch (rng() % 3) {
        case 0: {
          Bytes p(kSmall.page_size, static_cast<std::uint8_t>(rng()));
          const bool was = shadow.count({block, page}) != 0;
          if (was) {
            EXPECT_EQ(code_of([&] { dev.program_page(block, page, p); }),
                      Errc::ProgramWithoutErase);
          } else {
            dev.program_page(block, page, p);
            shadow[{block, page}] = p;
          }
          break;
        }
        case 1:
          dev.erase_block(block);
          ++erases[block];
          for (std::uint32_t pg = 0; pg < kSmall.pages_per_block; ++pg) shadow.erase({block, pg});
          break;
        default: {
          auto it = shadow.find({block, page});
          const Bytes expect = it == shadow.end() ? filled(kSmall.page_size, 0xFF) : it->second;
          ASSERT_EQ(dev.read_page(block, page), expect) << "seed " << seed << " step " << step;
          EXPECT_EQ(dev.is_programmed(block, page), it != shadow.end());
        }
      }
    }
    for (std::uint32_t b = 0; b < kSmall.block_count; ++b) EXPECT_EQ(dev.erase_count(b), erases[b]);
  }
}

TEST(BlockDevice, WholeBlockReadWrite) {
  BlockDevice dev(512, 16);
  EXPECT_EQ(dev.read(0, 1), Bytes(512, 0));
  dev.write(3, Bytes(1024, 0xAB));
  EXPECT_EQ(dev.read(3, 2), Bytes(1024, 0xAB));
  EXPECT_EQ(code_of([&] { dev.write(0, Bytes(100, 1)); }), Errc::SizeMismatch);
  EXPECT_EQ(code_of([&] { dev.write(15, Bytes(1024, 1)); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([&] { (void)dev.read(16, 1); }), Errc::OutOfRange);
}

TEST(BlockDevice, DumpRestore) {
  BlockDevice dev(512, 16);
  dev.write(1, Bytes(512, 1));
  const MediaImage snap = dev.dump();
  dev.write(1, Bytes(512, 2));
  EXPECT_NE(dev.dump(), snap);
  dev.restore(snap);
  EXPECT_EQ(dev.dump(), snap);
  BlockDevice other(512, 8);
  EXPECT_EQ(code_of([&] { other.restore(snap); }), Errc::GeometryMismatch);
}

TEST(MediaImage, SerializeRoundTrip) {
  NandDevice dev(kSmall);
  dev.program_page(1, 1, filled(256, 0x42));
  MediaImage img = dev.dump(Provenance::Die);
  const Bytes file = img.serialize();
  EXPECT_EQ(std::string(file.begin(), file.begin() + 4), "FVMI");
  EXPECT_EQ(file[5], 1);  // die provenance
  EXPECT_EQ(MediaImage::parse(file), img);
}

TEST(MediaImage, EverySingleByteCorruptionDetected) {
  BlockDevice dev(512, 2);
  dev.write(0, Bytes(512, 0x33));
  const Bytes file = dev.dump().serialize();
  for (std::size_t i = 0; i < file.size(); ++i) {
    Bytes bad = file;
    bad[i] ^= 0x01;
    EXPECT_EQ(code_of([&] { (void)MediaImage::parse(bad); }), Errc::ImageCorrupt) << i;
  }
  EXPECT_EQ(code_of([&] { (void)MediaImage::parse(Bytes(file.begin(), file.end() - 1)); }),
            Errc::ImageCorrupt);
}

TEST(MediaImage, SaveLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "fvsim_media_image_test.fvmi";
  NandDevice dev(kSmall);
  dev.program_page(7, 3, filled(256, 0));
  const MediaImage img = dev.dump();
  img.save(path);
  EXPECT_EQ(MediaImage::load(path), img);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { (void)MediaImage::load(path); }), Errc::Io);
}
