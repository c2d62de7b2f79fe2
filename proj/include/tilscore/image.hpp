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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tilscore {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB raster. Width and height are at least 1.
class PixelBuffer {
 public:
  PixelBuffer() = default;
  PixelBuffer(int width, int height, Rgb fill = {255, 255, 255});
  PixelBuffer(int width, int height, std::vector<std::uint8_t> bytes);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &bytes_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &bytes_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> mutable_bytes() { return bytes_; }
  std::span<const std::uint8_t> row(int y) const {
    return std::span(bytes_).subspan(3 * static_cast<std::size_t>(y) * width_,
                                     3 * static_cast<std::size_t>(width_));
  }

  /// Copies the rectangle [x, x+w) x [y, y+h); throws kBounds when it does
  /// not fit.
  PixelBuffer crop(int x, int y, int w, int h) const;

  friend bool operator==(const PixelBuffer&, const PixelBuffer&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// Box-filter resample: every output pixel averages the source block
/// [floor(x*sw/tw), floor((x+1)*sw/tw)) in each axis (at least one pixel),
/// rounded half-up.
PixelBuffer BoxResize(const PixelBuffer& src, int target_w, int target_h);

/// Aspect-preserving target for fitting the longest side into `max_dim`:
/// each side is floor(side * max_dim / longest), minimum 1. Returns the
/// original dims when the image already fits.
std::pair<int, int> FitWithin(int width, int height, int max_dim);

using PngText = std::vector<std::pair<std::string, std::string>>;

PixelBuffer ReadPng(const std::filesystem::path& path);

/// Header-only probe; returns (width, height).
std::pair<int, int> PngDimensions(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. No timestamp chunk is emitted, so identical
/// input produces identical bytes.
void WritePng(const std::filesystem::path& path, const PixelBuffer& image,
              const PngText& text = {});

/// 8-bit single-channel PNG.
void WriteGrayPng(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint8_t> values);
std::vector<std::uint8_t> ReadGrayPng(const std::filesystem::path& path,
                                      int* width, int* height);

}  // namespace tilscore
