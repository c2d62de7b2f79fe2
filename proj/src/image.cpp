// Copyright 2026 The TILscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tilscore/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "tilscore/error.hpp"

namespace tilscore {

PixelBuffer::PixelBuffer(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    Fail(ErrorKind::kArgument, "PixelBuffer: width and height must be >= 1");
  }
  bytes_.resize(3 * static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < bytes_.size(); i += 3) {
    bytes_[i] = fill.r;
    bytes_[i + 1] = fill.g;
    bytes_[i + 2] = fill.b;
  }
}

PixelBuffer::PixelBuffer(int width, int height, std::vector<std::uint8_t> bytes)
    : width_(width), height_(height), bytes_(std::move(bytes)) {
  if (width < 1 || height < 1) {
    Fail(ErrorKind::kArgument, "PixelBuffer: width and height must be >= 1");
  }
  if (bytes_.size() != 3 * static_cast<std::size_t>(width) * height) {
    Fail(ErrorKind::kArgument, "PixelBuffer: byte count != 3 * width * height");
  }
}

PixelBuffer PixelBuffer::crop(int x, int y, int w, int h) const {
  if (w < 1 || h < 1) Fail(ErrorKind::kArgument, "crop: empty rectangle");
  if (x < 0 || y < 0 || x > width_ - w || y > height_ - h) {
    Fail(ErrorKind::kBounds, "crop: rectangle outside image");
  }
  std::vector<std::uint8_t> out(3 * static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    const auto src = row(y + r).subspan(3 * static_cast<std::size_t>(x),
                                        3 * static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(),
              out.begin() + 3 * static_cast<std::ptrdiff_t>(r) * w);
  }
  return PixelBuffer(w, h, std::move(out));
}

PixelBuffer BoxResize(const PixelBuffer& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    Fail(ErrorKind::kArgument, "BoxResize: target must be >= 1x1");
  }
  if (target_w == src.width() && target_h == src.height()) return src;
  const int sw = src.width();
  const int sh = src.height();
  auto bounds = [](int i, int s, int t) {
    int lo = static_cast<int>(static_cast<long long>(i) * s / t);
    int hi = static_cast<int>(static_cast<long long>(i + 1) * s / t);
    if (hi <= lo) hi = std::min(lo + 1, s);
    return std::pair{lo, hi};
  };
  std::vector<std::pair<int, int>> xs(target_w);
  for (int x = 0; x < target_w; ++x) xs[x] = bounds(x, sw, target_w);

  PixelBuffer out(target_w, target_h);
  std::vector<std::uint32_t> acc(3 * static_cast<std::size_t>(target_w));
  const auto in = src.bytes();
  for (int y = 0; y < target_h; ++y) {
    const auto [y0, y1] = bounds(y, sh, target_h);
    std::fill(acc.begin(), acc.end(), 0u);
    for (int sy = y0; sy < y1; ++sy) {
      const std::uint8_t* r = &in[3 * static_cast<std::size_t>(sy) * sw];
      for (int x = 0; x < target_w; ++x) {
        std::uint32_t a0 = 0, a1 = 0, a2 = 0;
        for (int sx = xs[x].first; sx < xs[x].second; ++sx) {
          a0 += r[3 * sx];
          a1 += r[3 * sx + 1];
          a2 += r[3 * sx + 2];
        }
        acc[3 * x] += a0;
        acc[3 * x + 1] += a1;
        acc[3 * x + 2] += a2;
      }
    }
    for (int x = 0; x < target_w; ++x) {
      const std::uint32_t n = static_cast<std::uint32_t>(
          (xs[x].second - xs[x].first) * (y1 - y0));
      out.set(x, y,
              {static_cast<std::uint8_t>((2 * acc[3 * x] + n) / (2 * n)),
               static_cast<std::uint8_t>((2 * acc[3 * x + 1] + n) / (2 * n)),
               static_cast<std::uint8_t>((2 * acc[3 * x + 2] + n) / (2 * n))});
    }
  }
  return out;
}

std::pair<int, int> FitWithin(int width, int height, int max_dim) {
  const int longest = std::max(width, height);
  if (longest <= max_dim) return {width, height};
  auto scale = [&](int side) {
    return std::max(1, static_cast<int>(static_cast<long long>(side) * max_dim /
                                        longest));
  };
  return {scale(width), scale(height)};
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return f;
}

PixelBuffer ReadPngAs(const std::filesystem::path& path, png_uint_32 format,
                      int channels, std::vector<std::uint8_t>* gray, int* w,
                      int* h) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    Fail(ErrorKind::kFormat, "cannot decode " + path.string() + ": " + msg);
  }
  image.format = format;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    Fail(ErrorKind::kFormat, "cannot decode " + path.string() + ": " + msg);
  }
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  if (channels == 1) {
    *gray = std::move(bytes);
    *w = width;
    *h = height;
    return {};
  }
  return PixelBuffer(width, height, std::move(bytes));
}

void WritePngRaw(const std::filesystem::path& path, int width, int height,
                 int color_type, std::span<const std::uint8_t> bytes,
                 std::size_t stride, const PngText& text) {
  FilePtr f = OpenFile(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) Fail(ErrorKind::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    Fail(ErrorKind::kIo, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorKind::kIo, "cannot encode " + path.string());
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 2);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].first.c_str());
    chunks[i].text = const_cast<char*>(text[i].second.c_str());
  }
  if (!chunks.empty()) {
    png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

PixelBuffer ReadPng(const std::filesystem::path& path) {
  return ReadPngAs(path, PNG_FORMAT_RGB, 3, nullptr, nullptr, nullptr);
}

std::pair<int, int> PngDimensions(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    Fail(ErrorKind::kFormat, "cannot decode " + path.string() + ": " + msg);
  }
  std::pair<int, int> dims{static_cast<int>(image.width),
                           static_cast<int>(image.height)};
  png_image_free(&image);
  return dims;
}

void WritePng(const std::filesystem::path& path, const PixelBuffer& image,
              const PngText& text) {
  WritePngRaw(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB,
              image.bytes(), 3 * static_cast<std::size_t>(image.width()), text);
}

void WriteGrayPng(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint8_t> values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    Fail(ErrorKind::kArgument, "WriteGrayPng: size mismatch");
  }
  WritePngRaw(path, width, height, PNG_COLOR_TYPE_GRAY, values,
              static_cast<std::size_t>(width), {});
}

std::vector<std::uint8_t> ReadGrayPng(const std::filesystem::path& path,
                                      int* width, int* height) {
  std::vector<std::uint8_t> out;
  ReadPngAs(path, PNG_FORMAT_GRAY, 1, &out, width, height);
  return out;
}

}  // namespace tilscore
