#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "derain/config.hpp"
#include "derain/io.hpp"
#include "derain/kv.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace derain;
using testing_support::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST(Io, QuantizeRoundsAndClamps) {
  EXPECT_EQ(io::quantize(1.2), 255);
  EXPECT_EQ(io::quantize(-0.3), 0);
  EXPECT_EQ(io::quantize(128.0 / 255.0), 128);
  EXPECT_EQ(io::quantize(127.5 / 255.0), 128);
}

TEST(Io, ReadsBinaryPgm) {
  TempDir dir("pgm");
  write_bytes(dir / "a.pgm", std::string("P5\n# comment\n2 2\n255\n") + char(128) + char(0) +
                                 char(255) + char(64));
  const io::Frame f = io::read_image(dir / "a.pgm");
  ASSERT_EQ(f.height, 2u);
  ASSERT_EQ(f.width, 2u);
  // Row-major file order becomes column-major storage.
  EXPECT_DOUBLE_EQ(f.values[0], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(f.values[2], 0.0);
  EXPECT_DOUBLE_EQ(f.values[1], 1.0);
}

TEST(Io, ColourIsConvertedToLuma) {
  TempDir dir("ppm");
  write_bytes(dir / "red.ppm", "P3\n2 2\n255\n255 0 0  255 0 0\n255 0 0  255 0 0\n");
  const io::Frame f = io::read_image(dir / "red.ppm");
  for (double v : f.values) EXPECT_NEAR(v, 0.299, 1e-12);
}

TEST(Io, SequenceRoundTripWithinQuantization) {
  std::mt19937_64 rng(40);
  const VideoTensor x = oracle::random_tensor({9, 7, 3}, rng, 0.0, 1.0);
  for (auto fmt : {io::ImageFormat::pgm, io::ImageFormat::png}) {
    TempDir dir("seq");
    const auto files = io::write_sequence(x, dir.path(), fmt);
    ASSERT_EQ(files.size(), 3u);
    const VideoTensor y = io::read_sequence(dir.path().string());
    EXPECT_LE(max_abs(y - x), 1.0 / 510.0 + 1e-12);
    const VideoTensor z = io::read_sequence((dir.path() / "frame_000[0-1].*").string());
    EXPECT_EQ(z.frames(), 2u);
  }
}

TEST(Io, MixedFrameSizesNameTheFile) {
  TempDir dir("mixed");
  io::write_sequence(VideoTensor(4, 4, 1), dir.path(), io::ImageFormat::pgm, "a");
  io::write_sequence(VideoTensor(5, 4, 1), dir.path(), io::ImageFormat::pgm, "b");
  try {
    io::read_sequence(dir.path().string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("b_0000.pgm"), std::string::npos);
  }
}

TEST(Io, MissingInputs) {
  EXPECT_THROW(io::read_video("/nonexistent/derain/input"), DataError);
  TempDir dir("empty");
  EXPECT_THROW(io::read_sequence(dir.path().string()), DataError);
  write_bytes(dir / "x.pgm", "P5\n2 2\n255\n");
  EXPECT_THROW(io::read_image(dir / "x.pgm"), DataError);
}

TEST(Io, RawContainerIsBitExact) {
  std::mt19937_64 rng(41);
  const VideoTensor x = oracle::random_tensor({5, 6, 4}, rng);
  TempDir dir("raw");
  io::write_tensor(x, dir / "x.rtv", io::Precision::float64);
  EXPECT_TRUE(io::is_raw_tensor(dir / "x.rtv"));
  EXPECT_EQ(io::read_tensor(dir / "x.rtv"), x);
  EXPECT_EQ(io::read_video((dir / "x.rtv").string()), x);

  VideoTensor f(3, 2, 1);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(0.1 * static_cast<double>(i));
  io::write_tensor(f, dir / "f.rtv", io::Precision::float32);
  EXPECT_EQ(io::read_tensor(dir / "f.rtv"), f);
}

TEST(Io, RawHeaderLayout) {
  TempDir dir("hdr");
  io::write_tensor(VideoTensor(3, 2, 1, 1.0), dir / "h.rtv", io::Precision::float32);
  std::ifstream in(dir / "h.rtv", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 40u + 6u * 4u);
  EXPECT_EQ(bytes.substr(0, 8), "DRNTNSR1");
  EXPECT_EQ(bytes[8], 1);   // version
  EXPECT_EQ(bytes[12], 1);  // float32
  EXPECT_EQ(bytes[16], 3);  // height
  EXPECT_EQ(bytes[24], 2);  // width
  EXPECT_EQ(bytes[32], 1);  // frames
}

TEST(Io, RawRejectsCorruptFiles) {
  TempDir dir("bad");
  io::write_tensor(VideoTensor(3, 2, 1), dir / "t.rtv");
  std::filesystem::resize_file(dir / "t.rtv", 50);
  EXPECT_THROW(io::read_tensor(dir / "t.rtv"), DataError);
  write_bytes(dir / "n.rtv", "NOTATENSOR");
  EXPECT_THROW(io::read_tensor(dir / "n.rtv"), DataError);
}

TEST(KeyValue, ParseAndWrite) {
  std::istringstream in("# settings\nalpha = 1,2,3,4,5\n\ntheta=auto\nmax_iters = 7\n");
  const KeyValueFile kv = KeyValueFile::parse(in, "test");
  EXPECT_EQ(kv.get("theta"), "auto");
  EXPECT_EQ(kv.get_int("max_iters"), 7);
  SolverConfig c;
  apply_solver_settings(c, kv);
  EXPECT_EQ(c.alpha[4], 5.0);
  EXPECT_FALSE(c.theta.has_value());
  EXPECT_EQ(c.max_outer, 7);
  std::istringstream bad("novalue\n");
  EXPECT_THROW(KeyValueFile::parse(bad, "bad"), UsageError);
  EXPECT_THROW(parse_fixed_list<5>("1,2,3", "alpha"), UsageError);
}

TEST(KeyValue, SolverSettingsRoundTrip) {
  SolverConfig c;
  c.alpha = {1.5, 2, 3, 4, 5};
  c.theta = RainAngle(33.25);
  c.tol = 2e-4;
  c.clamp_rain = false;
  KeyValueFile kv;
  write_solver_settings(c, kv);
  std::stringstream buf;
  kv.write(buf);
  SolverConfig d;
  apply_solver_settings(d, KeyValueFile::parse(buf, "buf"));
  EXPECT_EQ(d.alpha, c.alpha);
  EXPECT_EQ(d.theta->degrees(), 33.25);
  EXPECT_EQ(d.tol, c.tol);
  EXPECT_FALSE(d.clamp_rain);
}
