#include "typeblend/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include <jpeglib.h>

#include "typeblend/error.hpp"

namespace typeblend {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_prompt: return "invalid-prompt";
    case ErrorCode::empty_text: return "empty-text";
    case ErrorCode::empty_selection: return "empty-selection";
    case ErrorCode::unknown_font: return "unknown-font";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::backend_unreachable: return "backend-unreachable";
    case ErrorCode::backend_timeout: return "backend-timeout";
    case ErrorCode::no_op: return "no-op";
    case ErrorCode::inconsistent_feedback: return "inconsistent-feedback";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

Image::Image(int width, int height, Rgb fill, std::uint8_t alpha)
    : width_(std::max(width, 0)), height_(std::max(height, 0)), data_(pixel_count() * 4) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[i * 4 + 0] = fill.r;
    data_[i * 4 + 1] = fill.g;
    data_[i * 4 + 2] = fill.b;
    data_[i * 4 + 3] = alpha;
  }
}

Mask::Mask(int width, int height, bool value)
    : width_(std::max(width, 0)),
      height_(std::max(height, 0)),
      bits_(static_cast<std::size_t>(width_) * height_, value ? 1 : 0) {}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Rect Mask::bounds() const {
  Rect r{width_, height_, 0, 0};
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) {
        r.x0 = std::min(r.x0, x);
        r.y0 = std::min(r.y0, y);
        r.x1 = std::max(r.x1, x + 1);
        r.y1 = std::max(r.y1, y + 1);
      }
  if (r.empty()) return {};
  return r;
}

namespace {

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
  if (!same_size(a, b)) throw Error(ErrorCode::invalid_argument, "mask dimensions differ");
  Mask out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) out.set(x, y, op(a.get(x, y), b.get(x, y)));
  return out;
}

}  // namespace

Mask Mask::operator|(const Mask& o) const { return combine(*this, o, [](bool p, bool q) { return p || q; }); }
Mask Mask::operator&(const Mask& o) const { return combine(*this, o, [](bool p, bool q) { return p && q; }); }
Mask Mask::minus(const Mask& o) const { return combine(*this, o, [](bool p, bool q) { return p && !q; }); }
Mask Mask::inverted() const {
  Mask out(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) out.set(x, y, !get(x, y));
  return out;
}

bool same_size(const Image& a, const Image& b) { return a.width() == b.width() && a.height() == b.height(); }
bool same_size(const Image& a, const Mask& b) { return a.width() == b.width() && a.height() == b.height(); }
bool same_size(const Mask& a, const Mask& b) { return a.width() == b.width() && a.height() == b.height(); }

std::uint8_t luma(Rgb c) {
  // Rec. 601 weights in fixed point.
  return static_cast<std::uint8_t>((299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000);
}

Image mask_to_image(const Mask& m) {
  Image out(m.width(), m.height(), kBlack);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.get(x, y)) out.set(x, y, kWhite);
  return out;
}

Mask mask_from_image(const Image& img) {
  Mask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      m.set(x, y, img.alpha(x, y) >= 128 && luma(img.rgb(x, y)) >= 128);
  return m;
}

Mask dark_pixels(const Image& img) {
  Mask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      m.set(x, y, img.alpha(x, y) >= 128 && luma(img.rgb(x, y)) < 128);
  return m;
}

Image crop(const Image& img, const Rect& r) {
  if (r.empty() || r.x0 < 0 || r.y0 < 0 || r.x1 > img.width() || r.y1 > img.height())
    throw Error(ErrorCode::invalid_argument, "crop rectangle outside image");
  Image out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    std::memcpy(out.at(0, y), img.at(r.x0, r.y0 + y), static_cast<std::size_t>(r.width()) * 4);
  return out;
}

Mask crop(const Mask& m, const Rect& r) {
  if (r.empty() || r.x0 < 0 || r.y0 < 0 || r.x1 > m.width() || r.y1 > m.height())
    throw Error(ErrorCode::invalid_argument, "crop rectangle outside mask");
  Mask out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) out.set(x, y, m.get(r.x0 + x, r.y0 + y));
  return out;
}

Image resize_nearest(const Image& img, int width, int height) {
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(img.height() - 1, static_cast<int>((static_cast<long long>(y) * img.height()) / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(img.width() - 1, static_cast<int>((static_cast<long long>(x) * img.width()) / width));
      std::memcpy(out.at(x, y), img.at(sx, sy), 4);
    }
  }
  return out;
}

Mask resize_nearest(const Mask& m, int width, int height) {
  Mask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(m.height() - 1, static_cast<int>((static_cast<long long>(y) * m.height()) / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(m.width() - 1, static_cast<int>((static_cast<long long>(x) * m.width()) / width));
      out.set(x, y, m.get(sx, sy));
    }
  }
  return out;
}

Image resize_area(const Image& img, int width, int height) {
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy0 = static_cast<int>(static_cast<long long>(y) * img.height() / height);
    const int sy1 = std::max(sy0 + 1, static_cast<int>(static_cast<long long>(y + 1) * img.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx0 = static_cast<int>(static_cast<long long>(x) * img.width() / width);
      const int sx1 = std::max(sx0 + 1, static_cast<int>(static_cast<long long>(x + 1) * img.width() / width));
      std::array<std::uint64_t, 4> sum{};
      std::uint64_t n = 0;
      for (int v = sy0; v < std::min(sy1, img.height()); ++v)
        for (int u = sx0; u < std::min(sx1, img.width()); ++u) {
          const auto* p = img.at(u, v);
          for (int c = 0; c < 4; ++c) sum[c] += p[c];
          ++n;
        }
      auto* q = out.at(x, y);
      for (int c = 0; c < 4; ++c) q[c] = static_cast<std::uint8_t>((sum[c] + n / 2) / n);
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), seed);
}

std::uint64_t fingerprint(const Image& img) {
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(img.width()), static_cast<std::uint32_t>(img.height())};
  auto h = fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(dims), sizeof dims));
  return fnv1a64(img.bytes(), h);
}

// ---------------------------------------------------------------------------
// Codecs

namespace {

bool is_opaque(const Image& img) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.alpha(x, y) != 255) return false;
  return true;
}

bool looks_like_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

bool looks_like_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff; }

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::invalid_input, std::string("cannot decode PNG: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  Image out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.bytes().data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::invalid_input, "cannot decode PNG: " + msg);
  }
  return out;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  char message[JMSG_LENGTH_MAX];
};

[[noreturn]] void jpeg_throw(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  throw Error(ErrorCode::invalid_input, std::string("cannot decode JPEG: ") + err->message);
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_throw;
  struct Guard {
    jpeg_decompress_struct* c;
    ~Guard() { jpeg_destroy_decompress(c); }
  };
  jpeg_create_decompress(&cinfo);
  Guard guard{&cinfo};
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  Image out(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
  std::vector<std::uint8_t> row(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (int x = 0; x < out.width(); ++x) out.set(x, y, {row[x * 3], row[x * 3 + 1], row[x * 3 + 2]});
  }
  jpeg_finish_decompress(&cinfo);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw Error(ErrorCode::invalid_input, "cannot encode an empty image");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());

  const bool opaque = is_opaque(img);
  std::vector<std::uint8_t> rgb;
  const void* pixels = img.bytes().data();
  if (opaque) {
    image.format = PNG_FORMAT_RGB;
    rgb.reserve(img.pixel_count() * 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
      rgb.insert(rgb.end(), img.bytes().begin() + i * 4, img.bytes().begin() + i * 4 + 3);
    pixels = rgb.data();
  } else {
    image.format = PNG_FORMAT_RGBA;
  }

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes);
  if (looks_like_jpeg(bytes)) return decode_jpeg(bytes);
  throw Error(ErrorCode::invalid_input, "unsupported image format (expected PNG or JPEG)");
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

void write_png(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Base64 (RFC 4648, padded)

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+' || c == '-') return 62;
  if (c == '/' || c == '_') return 63;
  return -1;
}
}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  // Accept data URLs ("data:image/png;base64,....").
  if (text.starts_with("data:")) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw Error(ErrorCode::invalid_input, "malformed data URL");
    text.remove_prefix(comma + 1);
  }
  std::vector<std::uint8_t> out;
  out.reserve(text.size() * 3 / 4);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    const int v = decode_char(c);
    if (v < 0) throw Error(ErrorCode::invalid_input, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string image_to_base64_png(const Image& img) { return base64_encode(encode_png(img)); }

Image image_from_base64(std::string_view text) { return decode_image(base64_decode(text)); }

std::string mask_to_base64_png(const Mask& m) { return image_to_base64_png(mask_to_image(m)); }

Mask mask_from_base64(std::string_view text) { return mask_from_image(image_from_base64(text)); }

}  // namespace typeblend
