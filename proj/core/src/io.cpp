#include "pmp/io.hpp"

#include <png.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace pmp::io {

namespace {

constexpr std::uint64_t kMaxStackValues = std::uint64_t{1} << 31;
constexpr std::uint32_t kMaxStackDim = 1u << 20;

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

// Parses "Px <w> <h> <maxval>" with '#' comments; exactly one whitespace byte
// separates maxval from the raster.
NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes) {
  NetpbmHeader header;
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space_and_comments();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) ++pos;
    if (start == pos || pos - start > 9) {
      throw Error(ErrorCode::kCorruptData, std::string("bad netpbm ") + what);
    }
    int value = 0;
    for (std::size_t i = start; i < pos; ++i) value = value * 10 + (bytes[i] - '0');
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::kUnsupportedFormat, "not a netpbm file");
  }
  header.magic = {static_cast<char>(bytes[0]), static_cast<char>(bytes[1])};
  pos = 2;
  header.width = read_int("width");
  header.height = read_int("height");
  header.maxval = read_int("maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::kCorruptData, "netpbm header not terminated");
  }
  header.data_offset = pos + 1;
  if (header.width < 1 || header.height < 1) {
    throw Error(ErrorCode::kCorruptData, "netpbm dimensions must be positive");
  }
  return header;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(kSig, kSig + 8, bytes.begin());
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kCorruptData, "png: " + msg);
  }
  if (image.format != PNG_FORMAT_RGB) {
    png_image_free(&image);
    throw Error(ErrorCode::kUnsupportedFormat, "png must be 8-bit RGB without alpha or palette");
  }
  if (image.width > kMaxStackDim || image.height > kMaxStackDim) {
    png_image_free(&image);
    throw Error(ErrorCode::kDimensionOverflow, "png dimensions too large");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kCorruptData, "png: " + msg);
  }
  return RasterImage(static_cast<int>(image.height), static_cast<int>(image.width),
                     std::move(pixels));
}

RasterImage decode_ppm(std::span<const std::uint8_t> bytes) {
  NetpbmHeader header = parse_netpbm_header(bytes);
  if (header.magic != "P6") {
    throw Error(ErrorCode::kUnsupportedFormat,
                "netpbm variant " + header.magic + " is not 3-channel binary P6");
  }
  if (header.maxval != 255) {
    throw Error(ErrorCode::kUnsupportedFormat, "ppm maxval must be 255 (8-bit)");
  }
  const std::size_t n = static_cast<std::size_t>(header.width) * header.height * 3;
  if (bytes.size() - header.data_offset < n) {
    throw Error(ErrorCode::kCorruptData, "ppm raster truncated");
  }
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(header.data_offset),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(header.data_offset + n));
  return RasterImage(header.height, header.width, std::move(pixels));
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename onto " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (has_png_signature(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_ppm(bytes);
  throw Error(ErrorCode::kUnsupportedFormat, "neither PNG nor PPM");
}

RasterImage read_image(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& image) {
  std::string header = "P6\n" + std::to_string(image.width()) + " " +
                       std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RasterImage& image) {
  write_file_atomic(path, encode_ppm(image));
}

std::vector<std::uint8_t> encode_png(int height, int width, int channels,
                                     std::span<const std::uint8_t> samples) {
  if (channels != 3 && channels != 4) {
    throw Error(ErrorCode::kInvalidArgument, "png encoder supports 3 or 4 channels");
  }
  if (samples.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(ErrorCode::kDimensionMismatch, "sample buffer does not match png dimensions");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, samples.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("png sizing failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, samples.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, int height, int width, int channels,
               std::span<const std::uint8_t> samples) {
  write_file_atomic(path, encode_png(height, width, channels, samples));
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  write_png(path, image.height(), image.width(), 3, image.bytes());
}

PointSet parse_points(std::string_view text, int num_classes) {
  std::vector<Point> entries;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    line.remove_prefix(first);
    if (line.front() == '#') continue;

    int fields[3] = {0, 0, 0};
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), fields[f]);
      if (ec != std::errc{}) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected integer");
      }
      pos = static_cast<std::size_t>(ptr - line.data());
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (f < 2) {
        if (pos >= line.size() || line[pos] != ',') {
          throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected ','");
        }
        ++pos;
      }
    }
    if (pos != line.size()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": trailing characters");
    }
    if (fields[0] < 1 || fields[0] > num_classes + 1) {
      throw Error(ErrorCode::kOutOfRange, "line " + std::to_string(line_no) + ": class " +
                                              std::to_string(fields[0]) + " outside [1, " +
                                              std::to_string(num_classes + 1) + "]");
    }
    if (fields[1] < 0 || fields[2] < 0) {
      throw Error(ErrorCode::kOutOfRange, "line " + std::to_string(line_no) + ": negative coordinate");
    }
    entries.push_back({fields[0], fields[1], fields[2]});
    if (end == text.size()) break;
  }
  return PointSet(num_classes, std::move(entries));
}

PointSet read_points(const std::filesystem::path& path, int num_classes) {
  auto bytes = read_file(path);
  try {
    return parse_points({reinterpret_cast<const char*>(bytes.data()), bytes.size()}, num_classes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_points(const PointSet& points) {
  std::ostringstream out;
  for (const Point& p : points.entries()) out << p.class_id << ',' << p.x << ',' << p.y << '\n';
  return out.str();
}

void write_points(const std::filesystem::path& path, const PointSet& points) {
  write_text_atomic(path, format_points(points));
}

std::vector<std::uint8_t> encode_score_stack(const PlaneStack& stack) {
  std::vector<std::uint8_t> out;
  out.reserve(20 + stack.values().size() * 4);
  for (char c : {'P', 'M', 'S', 'M'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u16(out, kPmsmVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(stack.num_planes()));
  put_u32(out, static_cast<std::uint32_t>(stack.height()));
  put_u32(out, static_cast<std::uint32_t>(stack.width()));
  for (double v : stack.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

PlaneStack decode_score_stack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PMSM", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing PMSM magic");
  }
  if (bytes.size() < 20) {
    throw Error(ErrorCode::kTruncatedPayload, "header shorter than 20 bytes");
  }
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kPmsmVersion) {
    throw Error(ErrorCode::kVersionMismatch, "version " + std::to_string(version));
  }
  if (get_u16(bytes, 6) != 0) {
    throw Error(ErrorCode::kCorruptData, "reserved field must be zero");
  }
  const std::uint32_t planes = get_u32(bytes, 8);
  const std::uint32_t height = get_u32(bytes, 12);
  const std::uint32_t width = get_u32(bytes, 16);
  if (planes == 0 || height == 0 || width == 0) {
    throw Error(ErrorCode::kCorruptData, "zero stack dimension");
  }
  if (planes > 255 || height > kMaxStackDim || width > kMaxStackDim) {
    throw Error(ErrorCode::kDimensionOverflow, "stack dimension out of range");
  }
  const std::uint64_t count = std::uint64_t{planes} * height * width;
  if (count > kMaxStackValues) {
    throw Error(ErrorCode::kDimensionOverflow, "stack holds too many values");
  }
  const std::uint64_t payload = bytes.size() - 20;
  if (payload < count * 4) {
    throw Error(ErrorCode::kTruncatedPayload, "payload holds " + std::to_string(payload / 4) +
                                                  " values, header requires " + std::to_string(count));
  }
  if (payload > count * 4) {
    throw Error(ErrorCode::kCorruptData, "trailing bytes after payload");
  }
  PlaneStack stack(static_cast<int>(planes), static_cast<int>(height), static_cast<int>(width));
  auto values = stack.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 20 + 4 * i)));
  }
  return stack;
}

PlaneStack read_score_stack(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return decode_score_stack(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_score_stack(const std::filesystem::path& path, const PlaneStack& stack) {
  write_file_atomic(path, encode_score_stack(stack));
}

std::vector<std::uint8_t> encode_pgm(const LabelMask& mask) {
  std::string header =
      "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), mask.values().begin(), mask.values().end());
  return out;
}

LabelMask decode_pgm(std::span<const std::uint8_t> bytes) {
  NetpbmHeader header = parse_netpbm_header(bytes);
  if (header.magic != "P5") {
    throw Error(ErrorCode::kUnsupportedFormat, "mask must be binary PGM (P5)");
  }
  if (header.maxval < 1 || header.maxval > 255) {
    throw Error(ErrorCode::kUnsupportedFormat, "mask must be 8-bit");
  }
  const std::size_t n = static_cast<std::size_t>(header.width) * header.height;
  if (bytes.size() - header.data_offset < n) {
    throw Error(ErrorCode::kCorruptData, "pgm raster truncated");
  }
  LabelMask mask(header.height, header.width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(header.data_offset), n,
              mask.values().begin());
  return mask;
}

LabelMask read_mask(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return decode_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_mask(const std::filesystem::path& path, const LabelMask& mask) {
  write_file_atomic(path, encode_pgm(mask));
}

}  // namespace pmp::io
