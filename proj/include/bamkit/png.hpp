#pragma once

// 8-bit PNG interchange. Writes non-interlaced gray or RGB; reads any 8-bit
// gray/gray-alpha/RGB/RGBA/palette PNG (alpha dropped, palette expanded).

#include <filesystem>

#include "bamkit/image.hpp"

namespace bamkit::png {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
  bool operator==(const GrayImage&) const = default;
};

void write_gray(const std::filesystem::path& path, const GrayImage& img);
void write_rgb(const std::filesystem::path& path, const RgbImage& img);

// Encoded bytes, e.g. for hashing without touching the filesystem.
std::vector<std::uint8_t> encode_gray(const GrayImage& img);
std::vector<std::uint8_t> encode_rgb(const RgbImage& img);

GrayImage read_gray(const std::filesystem::path& path);  // RGB input converted by luma
RgbImage read_rgb(const std::filesystem::path& path);    // gray input replicated

GrayImage heatmap_to_gray(const Heatmap& h);  // value = round(255 v), clamped to [0,1]
GrayImage mask_to_gray(const BinaryMask& m);  // 0 or 255
BinaryMask gray_to_mask(const GrayImage& g);  // >= 128 -> 1

// PPM (P6) debug output.
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

}  // namespace bamkit::png
