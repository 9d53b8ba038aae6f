#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace typeblend {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
  friend auto operator<=>(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

// Integer pixel rectangle, half-open: covers x0 <= x < x1, y0 <= y < y1.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// 8-bit RGBA raster, row-major, top-left origin.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = kWhite, std::uint8_t alpha = 255);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ <= 0 || height_ <= 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t* at(int x, int y) { return &data_[(static_cast<std::size_t>(y) * width_ + x) * 4]; }
  const std::uint8_t* at(int x, int y) const {
    return &data_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  }
  Rgb rgb(int x, int y) const {
    const auto* p = at(x, y);
    return {p[0], p[1], p[2]};
  }
  std::uint8_t alpha(int x, int y) const { return at(x, y)[3]; }
  void set(int x, int y, Rgb c, std::uint8_t a = 255) {
    auto* p = at(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
    p[3] = a;
  }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Binary raster; every cell is 0 or 1.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool value = false);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty_extent() const { return width_ <= 0 || height_ <= 0; }

  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  // Out-of-range reads return false.
  bool get_or_false(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && get(x, y);
  }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  // Tight bounding box of set cells; empty rect if none.
  Rect bounds() const;

  Mask operator|(const Mask& o) const;
  Mask operator&(const Mask& o) const;
  Mask minus(const Mask& o) const;
  Mask inverted() const;

  std::span<const std::uint8_t> cells() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

bool same_size(const Image& a, const Image& b);
bool same_size(const Image& a, const Mask& b);
bool same_size(const Mask& a, const Mask& b);

std::uint8_t luma(Rgb c);

// Mask rendered as white-on-black (set cells white).
Image mask_to_image(const Mask& m);
// Set where luma < 128 and alpha >= 128.
Mask dark_pixels(const Image& img);

Image crop(const Image& img, const Rect& r);
Mask crop(const Mask& m, const Rect& r);
// Nearest-neighbour resampling.
Image resize_nearest(const Image& img, int width, int height);
Mask resize_nearest(const Mask& m, int width, int height);
// Box-filter downscale (each output pixel averages its source footprint).
Image resize_area(const Image& img, int width, int height);

// Content hash of dimensions and pixel bytes (FNV-1a 64).
std::uint64_t fingerprint(const Image& img);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

// PNG/JPEG codecs. Decoding sniffs the signature; encoding always emits PNG.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string image_to_base64_png(const Image& img);
Image image_from_base64(std::string_view text);
std::string mask_to_base64_png(const Mask& m);
// Mask PNGs are white foreground on black background.
Mask mask_from_base64(std::string_view text);
Mask mask_from_image(const Image& img);

}  // namespace typeblend
