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

#include "tilscore/tissue_mask.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "tilscore/error.hpp"

namespace tilscore {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

double Polygon::area() const {
  if (empty()) return 0.0;
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

std::array<double, 4> Polygon::bounds() const {
  if (vertices.empty()) return {0, 0, 0, 0};
  std::array<double, 4> b = {vertices[0].x, vertices[0].y, vertices[0].x,
                             vertices[0].y};
  for (const Point& p : vertices) {
    b[0] = std::min(b[0], p.x);
    b[1] = std::min(b[1], p.y);
    b[2] = std::max(b[2], p.x);
    b[3] = std::max(b[3], p.y);
  }
  return b;
}

bool Polygon::contains(double x, double y) const {
  bool inside = false;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices[i];
    const Point& b = vertices[j];
    if ((a.y > y) != (b.y > y)) {
      const double xi = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xi) inside = !inside;
    }
  }
  return inside;
}

std::uint8_t Saturation(Rgb c) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  if (mx == 0) return 0;
  return static_cast<std::uint8_t>((255 * (mx - mn) * 2 + mx) / (2 * mx));
}

int OtsuThreshold(std::span<const std::uint64_t, 256> histogram) {
  double total = 0.0;
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) {
    total += static_cast<double>(histogram[v]);
    sum_all += static_cast<double>(v) * static_cast<double>(histogram[v]);
  }
  int best_t = 0;
  double best = -1.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(histogram[t]);
    sum0 += static_cast<double>(t) * static_cast<double>(histogram[t]);
    const double w1 = total - w0;
    double between = 0.0;
    if (w0 > 0.0 && w1 > 0.0) {
      const double mu0 = sum0 / w0;
      const double mu1 = (sum_all - sum0) / w1;
      between = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
    }
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

BinaryMask MajorityFilter3x3(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      int on = 0;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= mask.width || yy >= mask.height) {
            continue;
          }
          ++n;
          on += mask.at(xx, yy) ? 1 : 0;
        }
      }
      out.set(x, y, 2 * on > n);
    }
  }
  return out;
}

BinaryMask binarize_thumbnail(const PixelBuffer& thumb) {
  if (thumb.empty()) Fail(ErrorKind::kArgument, "binarize: empty thumbnail");
  std::vector<std::uint8_t> sat(static_cast<std::size_t>(thumb.width()) *
                                thumb.height());
  std::array<std::uint64_t, 256> hist{};
  for (int y = 0; y < thumb.height(); ++y) {
    for (int x = 0; x < thumb.width(); ++x) {
      const std::uint8_t s = Saturation(thumb.at(x, y));
      sat[static_cast<std::size_t>(y) * thumb.width() + x] = s;
      ++hist[s];
    }
  }
  const int t = OtsuThreshold(hist);
  BinaryMask raw(thumb.width(), thumb.height());
  for (std::size_t i = 0; i < sat.size(); ++i) raw.bits[i] = sat[i] > t ? 1 : 0;
  return MajorityFilter3x3(raw);
}

Polygon extract_largest_contour(const BinaryMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
  int best_label = 0;
  std::size_t best_area = 0;
  int best_start = -1;
  int next = 0;
  std::deque<int> queue;
  for (int start = 0; start < w * h; ++start) {
    if (!mask.bits[start] || label[start]) continue;
    ++next;
    std::size_t area = 0;
    label[start] = next;
    queue.push_back(start);
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      ++area;
      const int px = p % w;
      const int py = p / w;
      const int nbr[4][2] = {{px + 1, py}, {px - 1, py}, {px, py + 1}, {px, py - 1}};
      for (const auto& q : nbr) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
        const int qi = q[1] * w + q[0];
        if (mask.bits[qi] && !label[qi]) {
          label[qi] = next;
          queue.push_back(qi);
        }
      }
    }
    if (area > best_area) {
      best_area = area;
      best_label = next;
      best_start = start;
    }
  }
  if (best_start < 0) Fail(ErrorKind::kEmptyTissue, "mask has no tissue");

  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h &&
           label[static_cast<std::size_t>(y) * w + x] == best_label;
  };
  // Direction 0..3 = right, down, left, up; the component stays on the
  // right-hand side of travel.
  constexpr int kStep[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const int sx = best_start % w;
  const int sy = best_start / w;
  Polygon poly;
  poly.space = CoordinateSpace::kThumbnail;
  poly.vertices.push_back({static_cast<double>(sx), static_cast<double>(sy)});
  int px = sx;
  int py = sy;
  int dir = 0;
  for (;;) {
    px += kStep[dir][0];
    py += kStep[dir][1];
    if (px == sx && py == sy) break;
    int ar[2];
    int al[2];
    switch (dir) {
      case 0: ar[0] = px;     ar[1] = py;     al[0] = px;     al[1] = py - 1; break;
      case 1: ar[0] = px - 1; ar[1] = py;     al[0] = px;     al[1] = py;     break;
      case 2: ar[0] = px - 1; ar[1] = py - 1; al[0] = px - 1; al[1] = py;     break;
      default: ar[0] = px;    ar[1] = py - 1; al[0] = px - 1; al[1] = py - 1; break;
    }
    int turn = dir;
    if (!inside(ar[0], ar[1])) {
      turn = (dir + 1) % 4;
    } else if (inside(al[0], al[1])) {
      turn = (dir + 3) % 4;
    }
    if (turn != dir) {
      poly.vertices.push_back({static_cast<double>(px), static_cast<double>(py)});
      dir = turn;
    }
  }
  return poly;
}

Polygon project_to_level0(const Polygon& poly, double scale_factor,
                          int level0_width, int level0_height) {
  if (!(scale_factor >= 1.0)) {
    Fail(ErrorKind::kArgument, "project_to_level0: scale_factor < 1");
  }
  Polygon out;
  out.space = CoordinateSpace::kLevel0;
  out.vertices.reserve(poly.vertices.size());
  for (const Point& p : poly.vertices) {
    out.vertices.push_back(
        {std::clamp(p.x * scale_factor, 0.0, static_cast<double>(level0_width)),
         std::clamp(p.y * scale_factor, 0.0,
                    static_cast<double>(level0_height))});
  }
  return out;
}

}  // namespace tilscore
