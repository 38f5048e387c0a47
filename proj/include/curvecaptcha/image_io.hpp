#pragma once

#include <png.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "raster.hpp"

namespace curvecaptcha {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

}  // namespace detail

// Encodes a monochrome raster as a 1-bit grayscale PNG (ink = 0 bit).
inline Bytes encode_png(const Raster& img) {
  detail::require(img.is_monochrome(), "PNG encoder accepts monochrome rasters only");
  detail::require(img.width > 0 && img.height > 0, "cannot encode an empty raster");
  const std::size_t row_bytes = (static_cast<std::size_t>(img.width) + 7) / 8;
  std::vector<std::uint8_t> packed(row_bytes * img.height, 0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) == kBlank) packed[y * row_bytes + x / 8] |= std::uint8_t(0x80 >> (x % 8));
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = &packed[y * row_bytes];

  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, detail::png_append, nullptr);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// Decodes any PNG to 8-bit gray. Pixels are returned as stored; callers that
// need a monochrome image check is_monochrome().
inline Raster decode_png(const Bytes& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ParameterError(std::string("decode_png: ") + image.message);
  if (image.width == 0 || image.height == 0 || image.width > (1u << 14) || image.height > (1u << 14)) {
    png_image_free(&image);
    throw ParameterError("decode_png: bad dimensions");
  }
  image.format = PNG_FORMAT_GRAY;
  Raster img(int(image.width), int(image.height));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr))
    throw ParameterError(std::string("decode_png: ") + image.message);
  return img;
}

// Netpbm reader for tile files: P1/P4 bitmaps and P2/P5 graymaps. Graymaps
// must contain only 0 and maxval.
inline Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw ParameterError(path.string() + ": " + what);
  };
  auto skip_ws = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_ws();
    std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) fail("malformed header");
    return std::stoi(data.substr(start, pos - start));
  };
  if (data.size() < 2 || data[0] != 'P') fail("not a netpbm file");
  const char kind = data[1];
  if (kind != '1' && kind != '2' && kind != '4' && kind != '5') fail("unsupported netpbm type");
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  if (w <= 0 || h <= 0 || w > 1 << 14 || h > 1 << 14) fail("bad dimensions");
  int maxval = 1;
  if (kind == '2' || kind == '5') {
    maxval = read_int();
    if (maxval <= 0 || maxval > 255) fail("unsupported maxval");
  }
  Raster img(w, h);
  if (kind == '4' || kind == '5') ++pos;  // single whitespace before binary data
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int v = 0;
      if (kind == '1') {
        skip_ws();
        if (pos >= data.size()) fail("truncated data");
        v = data[pos++] - '0';
        if (v != 0 && v != 1) fail("bad bit value");
        img.at(x, y) = v ? kInk : kBlank;
      } else if (kind == '4') {
        const std::size_t idx = pos + std::size_t(y) * ((w + 7) / 8) + x / 8;
        if (idx >= data.size()) fail("truncated data");
        v = (static_cast<unsigned char>(data[idx]) >> (7 - x % 8)) & 1;
        img.at(x, y) = v ? kInk : kBlank;
      } else {
        if (kind == '2') {
          v = read_int();
        } else {
          const std::size_t idx = pos + std::size_t(y) * w + x;
          if (idx >= data.size()) fail("truncated data");
          v = static_cast<unsigned char>(data[idx]);
        }
        if (v != 0 && v != maxval) fail("not monochrome");
        img.at(x, y) = v ? kBlank : kInk;
      }
    }
  }
  return img;
}

// Binary PBM (P4).
inline void write_pbm(const std::filesystem::path& path, const Raster& img) {
  detail::require(img.is_monochrome(), "PBM writer accepts monochrome rasters only");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << "P4\n" << img.width << ' ' << img.height << '\n';
  for (int y = 0; y < img.height; ++y) {
    for (int bx = 0; bx < (img.width + 7) / 8; ++bx) {
      unsigned char byte = 0;
      for (int bit = 0; bit < 8; ++bit) {
        const int x = bx * 8 + bit;
        if (x < img.width && img.is_ink(x, y)) byte |= static_cast<unsigned char>(0x80 >> bit);
      }
      out.put(static_cast<char>(byte));
    }
  }
}

inline std::string base64_encode(const Bytes& in) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == in.size()) {
    const std::uint32_t v = in[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline Bytes base64_decode(std::string_view in) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  Bytes out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const int v = value(c);
    if (v < 0) throw ParameterError("invalid base64 character");
    acc = (acc << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(std::uint8_t(acc >> bits));
    }
  }
  return out;
}

}  // namespace curvecaptcha
