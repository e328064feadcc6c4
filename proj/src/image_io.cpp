// Copyright 2026 The Pmet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace pmet {

namespace {

bool has_suffix(const std::string& s, const char* suf) {
  size_t n = std::strlen(suf);
  if (s.size() < n) return false;
  std::string tail = s.substr(s.size() - n);
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return tail == suf;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Tensor read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("read_image: cannot open " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_image: png init failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_image: png init failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_image: corrupt PNG " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_image: unsupported bit depth 16: " + path);
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS) ||
      color_type & PNG_COLOR_MASK_ALPHA)
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_image: unsupported channel count in " + path);
  }

  std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
  Tensor out(static_cast<int>(h), static_cast<int>(w), channels);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(c, static_cast<int>(y), static_cast<int>(x)) =
            row[x * channels + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const Tensor& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("write_image: cannot open " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_image: png init failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_image: png init failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_image: write failure " + path);
  }

  png_init_io(png, fp.get());
  int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width(), img.height(), 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.width()) * img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        row[static_cast<size_t>(x) * img.channels() + c] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_image: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P6")
    throw std::runtime_error("read_image: unsupported PNM magic in " + path);
  auto next_int = [&f, &path]() {
    // Skips whitespace and '#' comments.
    for (;;) {
      int ch = f.peek();
      if (ch == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(ch)) {
        f.get();
      } else {
        break;
      }
    }
    long v = -1;
    f >> v;
    if (v < 0) throw std::runtime_error("read_image: malformed PNM " + path);
    return v;
  };
  long w = next_int(), h = next_int(), maxv = next_int();
  if (maxv != 255)
    throw std::runtime_error("read_image: unsupported bit depth in " + path);
  f.get();  // single whitespace after header
  int channels = magic == "P6" ? 3 : 1;
  std::vector<uint8_t> buf(static_cast<size_t>(w) * h * channels);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (f.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("read_image: truncated PNM " + path);
  Tensor out(static_cast<int>(h), static_cast<int>(w), channels);
  size_t i = 0;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int c = 0; c < channels; ++c) out.at(c, y, x) = buf[i++] / 255.0;
  return out;
}

void write_pnm(const Tensor& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_image: cannot open " + path);
  f << (img.channels() == 3 ? "P6" : "P5") << "\n"
    << img.width() << " " << img.height() << "\n255\n";
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        f.put(static_cast<char>(std::lround(v * 255.0)));
      }
  if (!f) throw std::runtime_error("write_image: write failure " + path);
}

}  // namespace

Tensor read_image(const std::string& path) {
  Tensor img;
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm"))
    img = read_pnm(path);
  else
    img = read_png(path);
  validate_image(img, "read_image");
  return img;
}

void write_image(const Tensor& img, const std::string& path) {
  validate_image(img, "write_image");
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm"))
    write_pnm(img, path);
  else
    write_png(img, path);
}

void write_raw_f32(const Tensor& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_raw_f32: cannot open " + path);
  for (size_t i = 0; i < img.size(); ++i) {
    float v = static_cast<float>(img.data()[i]);
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    // Little-endian byte order regardless of host.
    char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                 static_cast<char>((bits >> 16) & 0xff),
                 static_cast<char>((bits >> 24) & 0xff)};
    f.write(b, 4);
  }
}

}  // namespace pmet
