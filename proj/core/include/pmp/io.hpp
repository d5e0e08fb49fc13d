#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp::io {

// Reads an 8-bit RGB PNG or binary PPM (P6). Anything else is UnsupportedFormat.
RasterImage read_image(const std::filesystem::path& path);
RasterImage decode_image(std::span<const std::uint8_t> bytes);

void write_ppm(const std::filesystem::path& path, const RasterImage& image);
std::vector<std::uint8_t> encode_ppm(const RasterImage& image);

// 8-bit RGB or RGBA PNG from interleaved samples.
std::vector<std::uint8_t> encode_png(int height, int width, int channels,
                                     std::span<const std::uint8_t> samples);
void write_png(const std::filesystem::path& path, int height, int width, int channels,
               std::span<const std::uint8_t> samples);
void write_png(const std::filesystem::path& path, const RasterImage& image);

// Point file: one `class_id,x,y` record per line, `#` starts a comment line.
PointSet parse_points(std::string_view text, int num_classes);
PointSet read_points(const std::filesystem::path& path, int num_classes);
std::string format_points(const PointSet& points);
void write_points(const std::filesystem::path& path, const PointSet& points);

// "PMSM" score-stack container:
//   bytes 0-3 "PMSM", u16 LE version (1), u16 LE reserved (0),
//   u32 LE planes, u32 LE height, u32 LE width,
//   planes*height*width binary32 LE values, plane-major then row-major.
inline constexpr std::uint16_t kPmsmVersion = 1;
std::vector<std::uint8_t> encode_score_stack(const PlaneStack& stack);
PlaneStack decode_score_stack(std::span<const std::uint8_t> bytes);
PlaneStack read_score_stack(const std::filesystem::path& path);
void write_score_stack(const std::filesystem::path& path, const PlaneStack& stack);

// Label masks as 8-bit binary PGM (P5).
std::vector<std::uint8_t> encode_pgm(const LabelMask& mask);
LabelMask decode_pgm(std::span<const std::uint8_t> bytes);
LabelMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const LabelMask& mask);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace pmp::io
