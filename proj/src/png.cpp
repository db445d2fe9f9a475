#include "bamkit/png.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "bamkit/fsutil.hpp"

namespace bamkit::png {

namespace {

[[noreturn]] void on_png_error(png_structp png_ptr, png_const_charp msg) {
  auto* where = static_cast<std::string*>(png_get_error_ptr(png_ptr));
  if (where != nullptr) *where = msg;
  png_longjmp(png_ptr, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode(std::size_t height, std::size_t width, int color_type, int channels,
                                 const std::uint8_t* pixels) {
  require(height > 0 && width > 0, ErrorCode::kInvalidArgument, "cannot encode an empty image");
  std::vector<std::uint8_t> out;
  std::string error;
  png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
  png_infop info_ptr = png_ptr ? png_create_info_struct(png_ptr) : nullptr;
  if (info_ptr == nullptr) {
    png_destroy_write_struct(&png_ptr, nullptr);
    fail(ErrorCode::kIo, "png: out of memory");
  }
  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_write_struct(&png_ptr, &info_ptr);
    fail(ErrorCode::kIo, "png encode failed: " + error);
  }
  png_set_write_fn(
      png_ptr, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png_ptr, info_ptr, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_filter(png_ptr, 0, PNG_FILTER_NONE);
  png_set_compression_level(png_ptr, 6);
  png_write_info(png_ptr, info_ptr);
  const std::size_t stride = width * static_cast<std::size_t>(channels);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png_ptr, const_cast<png_bytep>(pixels + y * stride));
  }
  png_write_end(png_ptr, nullptr);
  png_destroy_write_struct(&png_ptr, &info_ptr);
  return out;
}

struct Decoded {
  std::size_t height = 0;
  std::size_t width = 0;
  int channels = 0;  // 1 (gray) or 3 (rgb)
  std::vector<std::uint8_t> pixels;
};

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

Decoded decode(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  require(bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0, ErrorCode::kInvalidData,
          "not a PNG file: " + path.string());
  std::string error;
  png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
  png_infop info_ptr = png_ptr ? png_create_info_struct(png_ptr) : nullptr;
  if (info_ptr == nullptr) {
    png_destroy_read_struct(&png_ptr, nullptr, nullptr);
    fail(ErrorCode::kIo, "png: out of memory");
  }
  Decoded d;
  ReadCursor cursor{bytes.data(), bytes.size(), 0};
  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    fail(ErrorCode::kInvalidData, "png decode failed for " + path.string() + ": " + error);
  }
  png_set_read_fn(png_ptr, &cursor, [](png_structp p, png_bytep out, png_size_t len) {
    auto* c = static_cast<ReadCursor*>(png_get_io_ptr(p));
    if (c->pos + len > c->size) png_error(p, "truncated PNG stream");
    std::memcpy(out, c->data + c->pos, len);
    c->pos += len;
  });
  png_read_info(png_ptr, info_ptr);
  const int bit_depth = png_get_bit_depth(png_ptr, info_ptr);
  const int color_type = png_get_color_type(png_ptr, info_ptr);
  if (bit_depth != 8 && color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    fail(ErrorCode::kInvalidData, "only 8-bit PNG is supported: " + path.string());
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png_ptr);
  png_set_interlace_handling(png_ptr);
  png_read_update_info(png_ptr, info_ptr);
  d.width = png_get_image_width(png_ptr, info_ptr);
  d.height = png_get_image_height(png_ptr, info_ptr);
  d.channels = png_get_channels(png_ptr, info_ptr);
  const std::size_t stride = png_get_rowbytes(png_ptr, info_ptr);
  d.pixels.resize(stride * d.height);
  std::vector<png_bytep> rows(d.height);
  for (std::size_t y = 0; y < d.height; ++y) rows[y] = d.pixels.data() + y * stride;
  png_read_image(png_ptr, rows.data());
  png_read_end(png_ptr, nullptr);
  png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
  return d;
}

}  // namespace

std::vector<std::uint8_t> encode_gray(const GrayImage& img) {
  require(img.pixels.size() == img.height * img.width, ErrorCode::kShapeMismatch, "gray image size mismatch");
  return encode(img.height, img.width, PNG_COLOR_TYPE_GRAY, 1, img.pixels.data());
}

std::vector<std::uint8_t> encode_rgb(const RgbImage& img) {
  require(img.pixels.size() == 3 * img.height * img.width, ErrorCode::kShapeMismatch, "rgb image size mismatch");
  return encode(img.height, img.width, PNG_COLOR_TYPE_RGB, 3, img.pixels.data());
}

void write_gray(const std::filesystem::path& path, const GrayImage& img) { write_file_atomic(path, encode_gray(img)); }

void write_rgb(const std::filesystem::path& path, const RgbImage& img) { write_file_atomic(path, encode_rgb(img)); }

GrayImage read_gray(const std::filesystem::path& path) {
  Decoded d = decode(path);
  GrayImage g{d.height, d.width, {}};
  if (d.channels == 1) {
    g.pixels = std::move(d.pixels);
    return g;
  }
  g.pixels.resize(d.height * d.width);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    const std::uint8_t* p = &d.pixels[3 * i];
    g.pixels[i] = static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
  }
  return g;
}

RgbImage read_rgb(const std::filesystem::path& path) {
  Decoded d = decode(path);
  RgbImage img(d.height, d.width);
  if (d.channels == 3) {
    img.pixels = std::move(d.pixels);
    return img;
  }
  for (std::size_t i = 0; i < d.height * d.width; ++i) {
    std::memset(&img.pixels[3 * i], d.pixels[i], 3);
  }
  return img;
}

GrayImage heatmap_to_gray(const Heatmap& h) {
  GrayImage g{h.height, h.width, std::vector<std::uint8_t>(h.size())};
  for (std::size_t i = 0; i < h.size(); ++i) g.pixels[i] = to_byte(h.values[i]);
  return g;
}

GrayImage mask_to_gray(const BinaryMask& m) {
  GrayImage g{m.height, m.width, std::vector<std::uint8_t>(m.size())};
  for (std::size_t i = 0; i < m.size(); ++i) g.pixels[i] = m.bits[i] ? 255 : 0;
  return g;
}

BinaryMask gray_to_mask(const GrayImage& g) {
  BinaryMask m(g.height, g.width);
  for (std::size_t i = 0; i < g.pixels.size(); ++i) m.bits[i] = g.pixels[i] >= 128 ? 1 : 0;
  return m;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  write_file_atomic(path, bytes);
}

}  // namespace bamkit::png
