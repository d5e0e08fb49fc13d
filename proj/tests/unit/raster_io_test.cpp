#include <gtest/gtest.h>
#include <png.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>

#include "pmp/io.hpp"
#include "pmp/raster.hpp"
#include "pmp/rng.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace pmp {
namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected pmp::Error";
  return ErrorCode::kIoError;
}

std::vector<std::uint8_t> ppm_bytes(int h, int w, std::uint8_t fill) {
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), static_cast<std::size_t>(h) * w * 3, fill);
  return bytes;
}

std::vector<std::uint8_t> gray_png(int h, int w) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * w, 100);
  png_alloc_size_t size = 0;
  png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr);
  std::vector<std::uint8_t> out(size);
  png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr);
  out.resize(size);
  return out;
}

TEST(RasterImage, BlackPpmDecodesToZeros) {
  const RasterImage image = io::decode_image(ppm_bytes(2, 2, 0));
  ASSERT_EQ(image.height(), 2);
  ASSERT_EQ(image.width(), 2);
  for (double v : image.normalized()) EXPECT_EQ(v, 0.0);
  for (auto b : image.bytes()) EXPECT_EQ(b, 0);
}

TEST(RasterImage, FullIntensityNormalizesToExactlyOne) {
  const RasterImage image = io::decode_image(ppm_bytes(1, 3, 255));
  for (double v : image.normalized()) EXPECT_EQ(v, 1.0);
}

TEST(RasterImage, NormalizedViewIsBytesOver255) {
  Rng rng(7);
  const RasterImage image = oracle::random_image(5, 7, rng);
  for (std::size_t i = 0; i < image.bytes().size(); ++i) {
    EXPECT_EQ(image.normalized()[i], image.bytes()[i] / 255.0);
  }
}

TEST(RasterImage, RejectsEmptyAndMismatchedBuffers) {
  EXPECT_EQ(code_of([] { RasterImage(0, 3, std::vector<std::uint8_t>{}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { RasterImage(2, 2, std::vector<std::uint8_t>(11)); }),
            ErrorCode::kCorruptData);
}

TEST(ReadImage, GrayscalePngIsUnsupported) {
  EXPECT_EQ(code_of([] { io::decode_image(gray_png(3, 3)); }), ErrorCode::kUnsupportedFormat);
}

TEST(ReadImage, SixteenBitPpmIsUnsupported) {
  const std::string text = "P6\n1 1\n65535\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.insert(bytes.end(), 6, 0);
  EXPECT_EQ(code_of([&] { io::decode_image(bytes); }), ErrorCode::kUnsupportedFormat);
}

TEST(ReadImage, GraymapPgmIsUnsupported) {
  const std::string text = "P5\n1 1\n255\n\x10";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  EXPECT_EQ(code_of([&] { io::decode_image(bytes); }), ErrorCode::kUnsupportedFormat);
}

TEST(ReadImage, TruncatedPpmIsCorrupt) {
  auto bytes = ppm_bytes(2, 2, 9);
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { io::decode_image(bytes); }), ErrorCode::kCorruptData);
}

TEST(ReadImage, GarbageIsUnsupported) {
  const std::vector<std::uint8_t> bytes = {'h', 'e', 'l', 'l', 'o'};
  EXPECT_EQ(code_of([&] { io::decode_image(bytes); }), ErrorCode::kUnsupportedFormat);
}

TEST(ReadImage, MissingFile) {
  EXPECT_EQ(code_of([] { io::read_image("/nonexistent/none.png"); }), ErrorCode::kMissingFile);
}

TEST(ReadImage, PngAndPpmRoundTripExactly) {
  test::TempDir dir;
  Rng rng(11);
  const RasterImage image = oracle::random_image(9, 13, rng);
  io::write_png(dir.path() / "a.png", image);
  io::write_ppm(dir.path() / "a.ppm", image);
  EXPECT_EQ(io::read_image(dir.path() / "a.png"), image);
  EXPECT_EQ(io::read_image(dir.path() / "a.ppm"), image);
  EXPECT_EQ(io::encode_ppm(io::decode_image(io::encode_ppm(image))), io::encode_ppm(image));
}

TEST(Points, SingleRecord) {
  const PointSet points = io::parse_points("1,10,20\n", 20);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points.entries()[0], (Point{1, 10, 20}));
}

TEST(Points, BackgroundClassIsCPlusOne) {
  const PointSet points = io::parse_points("21,0,0", 20);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points.entries()[0].class_id, points.background_class());
}

TEST(Points, ClassZeroIsRejected) {
  EXPECT_EQ(code_of([] { io::parse_points("0,5,5\n", 20); }), ErrorCode::kOutOfRange);
}

TEST(Points, ClassAboveBackgroundIsRejected) {
  EXPECT_EQ(code_of([] { io::parse_points("22,5,5\n", 20); }), ErrorCode::kOutOfRange);
}

TEST(Points, CommentsAndBlankLinesAreSkippedAndOrderKept) {
  const PointSet points = io::parse_points("# header\n\n2,1,1\r\n  # indented\n1,0,3\n", 2);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points.entries()[0], (Point{2, 1, 1}));
  EXPECT_EQ(points.entries()[1], (Point{1, 0, 3}));
}

TEST(Points, MalformedLineReportsLineNumber) {
  try {
    io::parse_points("1,2,3\n1;2;3\n", 4);
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { io::parse_points("1,2,3,4\n", 4); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { io::parse_points("1,2\n", 4); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { io::parse_points("a,2,3\n", 4); }), ErrorCode::kParseError);
}

TEST(Points, DuplicatesAreRejected) {
  EXPECT_EQ(code_of([] { io::parse_points("1,2,3\n1,2,3\n", 4); }), ErrorCode::kInvalidArgument);
}

TEST(Points, BoundsAreCheckedAgainstTheImage) {
  const PointSet points = io::parse_points("1,4,0\n", 1);
  EXPECT_NO_THROW(points.check_bounds(1, 5));
  EXPECT_EQ(code_of([&] { points.check_bounds(1, 4); }), ErrorCode::kOutOfRange);
}

TEST(Points, FormatRoundTrips) {
  const PointSet points(3, {{1, 0, 0}, {4, 7, 2}, {2, 3, 9}});
  const PointSet back = io::parse_points(io::format_points(points), 3);
  EXPECT_EQ(back.entries(), points.entries());
}

TEST(ScoreStack, RoundTripIsBitExact) {
  Rng rng(3);
  PlaneStack stack(3, 4, 5);
  for (double& v : stack.values()) v = static_cast<float>(rng.uniform());
  const auto bytes = io::encode_score_stack(stack);
  const PlaneStack back = io::decode_score_stack(bytes);
  EXPECT_EQ(back, stack);
  EXPECT_EQ(io::encode_score_stack(back), bytes);
}

TEST(ScoreStack, HeaderLayout) {
  PlaneStack stack(2, 3, 4, 0.5);
  const auto bytes = io::encode_score_stack(stack);
  ASSERT_EQ(bytes.size(), 20u + 2 * 3 * 4 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PMSM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 3);
  EXPECT_EQ(bytes[16], 4);
  float first;
  std::memcpy(&first, bytes.data() + 20, 4);
  EXPECT_EQ(first, 0.5f);
}

TEST(ScoreStack, BadMagic) {
  auto bytes = io::encode_score_stack(PlaneStack(1, 1, 1));
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_EQ(code_of([&] { io::decode_score_stack(bytes); }), ErrorCode::kBadMagic);
}

TEST(ScoreStack, VersionMismatch) {
  auto bytes = io::encode_score_stack(PlaneStack(1, 1, 1));
  bytes[4] = 2;
  EXPECT_EQ(code_of([&] { io::decode_score_stack(bytes); }), ErrorCode::kVersionMismatch);
}

TEST(ScoreStack, TruncatedPayload) {
  auto bytes = io::encode_score_stack(PlaneStack(2, 4, 4));
  bytes.resize(bytes.size() - 4);
  EXPECT_EQ(code_of([&] { io::decode_score_stack(bytes); }), ErrorCode::kTruncatedPayload);
  EXPECT_EQ(code_of([&] { io::decode_score_stack(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)); }),
            ErrorCode::kTruncatedPayload);
}

TEST(ScoreStack, DimensionOverflowIsRejectedNotClamped) {
  auto bytes = io::encode_score_stack(PlaneStack(1, 1, 1));
  for (int i = 12; i < 20; ++i) bytes[i] = 0xff;
  EXPECT_EQ(code_of([&] { io::decode_score_stack(bytes); }), ErrorCode::kDimensionOverflow);
}

TEST(ScoreStack, FileRoundTripIsByteIdentical) {
  test::TempDir dir;
  Rng rng(5);
  PlaneStack stack(4, 6, 3);
  for (double& v : stack.values()) v = static_cast<float>(rng.uniform());
  io::write_score_stack(dir.path() / "s.pmsm", stack);
  const auto original = io::read_file(dir.path() / "s.pmsm");
  io::write_score_stack(dir.path() / "t.pmsm", io::read_score_stack(dir.path() / "s.pmsm"));
  EXPECT_EQ(io::read_file(dir.path() / "t.pmsm"), original);
}

TEST(Mask, PgmRoundTrip) {
  LabelMask mask(3, 4);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = static_cast<std::uint8_t>(i % 5);
  const auto bytes = io::encode_pgm(mask);
  EXPECT_EQ(io::decode_pgm(bytes), mask);
  EXPECT_EQ(io::encode_pgm(io::decode_pgm(bytes)), bytes);
}

TEST(Mask, RejectsNonP5AndDeepPgm) {
  const std::string ascii = "P2\n1 1\n255\n0\n";
  EXPECT_EQ(code_of([&] { io::decode_pgm({reinterpret_cast<const std::uint8_t*>(ascii.data()), ascii.size()}); }),
            ErrorCode::kUnsupportedFormat);
  const std::string deep = "P5\n1 1\n65535\n\0\0";
  EXPECT_EQ(code_of([&] { io::decode_pgm({reinterpret_cast<const std::uint8_t*>(deep.data()), deep.size()}); }),
            ErrorCode::kUnsupportedFormat);
}

TEST(Mask, CheckLabels) {
  LabelMask mask(1, 3);
  mask[2] = 4;
  EXPECT_NO_THROW(check_labels(mask, 3));
  EXPECT_EQ(code_of([&] { check_labels(mask, 2); }), ErrorCode::kOutOfRange);
}

TEST(AtomicWrite, ReplacesDestinationAndLeavesNoTemporaries) {
  test::TempDir dir;
  const auto path = dir.path() / "out.txt";
  io::write_text_atomic(path, "first");
  io::write_text_atomic(path, "second");
  const auto bytes = io::read_file(path);
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1);
}

TEST(PlaneStack, LayoutIsPlaneMajorThenRowMajor) {
  PlaneStack stack(2, 2, 3);
  stack.at(1, 1, 2) = 7.0;
  EXPECT_EQ(stack.values()[1 * 6 + 1 * 3 + 2], 7.0);
  EXPECT_EQ(stack.plane(1)[5], 7.0);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  EXPECT_NE(derive_seed(1, std::string_view("a.png")), derive_seed(1, std::string_view("b.png")));
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const int k = c.uniform_int(-2, 3);
    EXPECT_GE(k, -2);
    EXPECT_LE(k, 3);
  }
}

}  // namespace
}  // namespace pmp
