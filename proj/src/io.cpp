// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace ps {
namespace {

constexpr char kMagic[4] = {'P', 'S', 'R', '1'};
constexpr std::uint8_t kMaxKindCode = 4;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

Raster read_png_rgb(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw FormatError("cannot open PNG file: " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("libpng initialization failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("malformed PNG: " + path.string());
  }

  png_init_io(png, fp);
  png_read_info(png, info);

  // Normalize everything to 8-bit RGB.
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));

  std::vector<unsigned char> rowbuf(static_cast<size_t>(w) * 3);
  Raster out(w, h, 3, RasterKind::Rgb);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = rowbuf[static_cast<size_t>(x) * 3 + c] / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

bool has_png_magic(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  unsigned char sig[8] = {};
  is.read(reinterpret_cast<char*>(sig), 8);
  return is.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

}  // namespace

void write_raster(const Raster& r, const std::filesystem::path& path) {
  r.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_u32le(os, static_cast<std::uint32_t>(r.width));
  write_u32le(os, static_cast<std::uint32_t>(r.height));
  write_u32le(os, static_cast<std::uint32_t>(r.channels));
  const std::uint8_t code = static_cast<std::uint8_t>(r.kind);
  os.write(reinterpret_cast<const char*>(&code), 1);
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(r.data.data()),
           static_cast<std::streamsize>(r.size()) * 4);
  if (!os) throw Error("short write: " + path.string());
}

Raster read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error("no such file: " + path.string());
  if (has_png_magic(path)) return read_png_rgb(path);

  std::ifstream is(path, std::ios::binary);
  unsigned char header[17];
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (is.gcount() != sizeof(header))
    throw FormatError(path.string() + ": truncated header at byte offset " +
                      std::to_string(is.gcount()));
  if (std::memcmp(header, kMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic at byte offset 0");

  const std::uint32_t w = read_u32le(header + 4);
  const std::uint32_t h = read_u32le(header + 8);
  const std::uint32_t c = read_u32le(header + 12);
  const std::uint8_t code = header[16];
  if (code > kMaxKindCode)
    throw FormatError(path.string() + ": unsupported kind code " +
                      std::to_string(code) + " at byte offset 16");
  if (w == 0 || h == 0 || c == 0)
    throw FormatError(path.string() + ": zero dimension in header");

  Raster out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c),
             static_cast<RasterKind>(code));
  const std::streamsize want = static_cast<std::streamsize>(out.size()) * 4;
  is.read(reinterpret_cast<char*>(out.data.data()), want);
  if (is.gcount() != want)
    throw FormatError(path.string() + ": truncated payload, expected " +
                      std::to_string(want) + " bytes at offset 17, got " +
                      std::to_string(is.gcount()));
  return out;
}

Raster read_raster_as(const std::filesystem::path& path, RasterKind expected) {
  Raster r = read_raster(path);
  if (r.kind != expected) {
    if (has_png_magic(path))
      throw FormatError(path.string() + ": PNG inputs are accepted for Rgb only");
    throw FormatError(path.string() + ": raster kind mismatch");
  }
  return r;
}

}  // namespace ps
