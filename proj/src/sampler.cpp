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

#include "tilscore/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tilscore/error.hpp"
#include "tilscore/parallel.hpp"
#include "tilscore/rng.hpp"
#include "tilscore/stain.hpp"

namespace tilscore {

namespace {
constexpr int kCoverageSamples = 16;

/// Sorted x positions where the horizontal line at `y` crosses the polygon.
std::vector<double> Crossings(const Polygon& poly, double y) {
  std::vector<double> xs;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > y) != (v[j].y > y)) {
      xs.push_back(v[i].x + (y - v[i].y) * (v[j].x - v[i].x) / (v[j].y - v[i].y));
    }
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

bool InsideByCrossings(const std::vector<double>& xs, double x) {
  const auto after = xs.end() - std::upper_bound(xs.begin(), xs.end(), x);
  return (after % 2) == 1;
}

StainMatrix MatrixFor(const PipelineConfig& cfg) {
  if (cfg.stain_matrix) return StainMatrix(*cfg.stain_matrix);
  return StainMatrix::RuifrokJohnston();
}
}  // namespace

std::string PatchId(const Candidate& c) {
  return c.slide_id + "@" + std::to_string(c.x) + "," + std::to_string(c.y);
}

double CellCoverage(const Polygon& tissue, int x, int y, int size) {
  if (tissue.empty()) return 0.0;
  const double step = static_cast<double>(size) / kCoverageSamples;
  int inside = 0;
  for (int r = 0; r < kCoverageSamples; ++r) {
    const auto xs = Crossings(tissue, y + (r + 0.5) * step);
    for (int c = 0; c < kCoverageSamples; ++c) {
      inside += InsideByCrossings(xs, x + (c + 0.5) * step) ? 1 : 0;
    }
  }
  return static_cast<double>(inside) / (kCoverageSamples * kCoverageSamples);
}

std::vector<Candidate> enumerate_candidates(const SlideMeta& meta,
                                            const Polygon& tissue,
                                            const PipelineConfig& cfg) {
  std::vector<Candidate> out;
  if (tissue.empty()) return out;
  const int p = cfg.patch_size;
  const auto b = tissue.bounds();
  const int ox = std::max(0, static_cast<int>(std::floor(b[0])));
  const int oy = std::max(0, static_cast<int>(std::floor(b[1])));
  const double step = static_cast<double>(p) / kCoverageSamples;
  const int needed = static_cast<int>(
      std::ceil(cfg.coverage_min * kCoverageSamples * kCoverageSamples - 1e-9));

  for (int y = oy; y < b[3] && y + p <= meta.height(); y += p) {
    // One crossing list per sample row serves the whole grid row.
    std::vector<std::vector<double>> rows(kCoverageSamples);
    for (int r = 0; r < kCoverageSamples; ++r) {
      rows[r] = Crossings(tissue, y + (r + 0.5) * step);
    }
    for (int x = ox; x < b[2] && x + p <= meta.width(); x += p) {
      int inside = 0;
      for (int r = 0; r < kCoverageSamples; ++r) {
        for (int c = 0; c < kCoverageSamples; ++c) {
          inside += InsideByCrossings(rows[r], x + (c + 0.5) * step) ? 1 : 0;
        }
      }
      if (inside >= needed) {
        Candidate cand;
        cand.slide_id = meta.slide_id;
        cand.x = x;
        cand.y = y;
        cand.patch_size = p;
        out.push_back(std::move(cand));
      }
    }
  }
  return out;
}

std::vector<Candidate> filter_by_hematoxylin(const SlideHandle& slide,
                                             std::vector<Candidate> candidates,
                                             const PipelineConfig& cfg) {
  const StainMatrix matrix = MatrixFor(cfg);
  const auto failures = ParallelFor(
      candidates.size(), cfg.workers, [&](std::size_t i) {
        Candidate& c = candidates[i];
        const PixelBuffer patch =
            slide.read_region(0, c.x, c.y, c.patch_size, c.patch_size);
        c.h_mean = hematoxylin_mean(patch, cfg.eval_dim, matrix);
        c.eligible = *c.h_mean >= cfg.h_threshold;
        if (!c.eligible) c.sampled = false;
      });
  RaiseFirstFailure(failures, "candidate");
  return candidates;
}

std::size_t SampleCount(std::size_t n_eligible, double ratio) {
  if (n_eligible == 0) return 0;
  const auto k = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(n_eligible) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n_eligible);
}

std::vector<Candidate> subsample(std::vector<Candidate> candidates,
                                 double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    Fail(ErrorKind::kArgument, "subsample: ratio must be in (0, 1]");
  }
  std::vector<std::uint32_t> pool;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].sampled = false;
    if (candidates[i].eligible) pool.push_back(static_cast<std::uint32_t>(i));
  }
  const std::size_t k = SampleCount(pool.size(), ratio);
  Pcg32 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + rng.bounded(static_cast<std::uint32_t>(pool.size() - i));
    std::swap(pool[i], pool[j]);
    candidates[pool[i]].sampled = true;
  }
  return candidates;
}

std::uint64_t SlideSeed(std::uint64_t run_seed, const std::string& slide_id) {
  return DeriveSeed(run_seed, {HashString(slide_id)});
}

std::string FormatReal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string CandidatesToCsv(const std::vector<Candidate>& candidates) {
  std::string out = kCandidateCsvHeader;
  out += '\n';
  for (const Candidate& c : candidates) {
    if (c.slide_id.find_first_of(",\"\n\r") != std::string::npos) {
      Fail(ErrorKind::kArgument, "slide_id may not contain , \" or newlines");
    }
    out += c.slide_id;
    out += ',' + std::to_string(c.x) + ',' + std::to_string(c.y) + ',' +
           std::to_string(c.patch_size) + ',';
    if (c.h_mean) out += FormatReal(*c.h_mean);
    out += c.eligible ? ",1" : ",0";
    out += c.sampled ? ",1," : ",0,";
    if (c.class_label) out += Name(*c.class_label);
    for (int k = 0; k < kNumPatchClasses; ++k) {
      out += ',';
      if (c.class_probs) out += FormatReal((*c.class_probs)[k]);
    }
    out += ',';
    if (c.til_count) out += std::to_string(*c.til_count);
    out += ',';
    if (c.density_mm2) out += FormatReal(*c.density_mm2);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void ParseFail(std::size_t line, const std::string& what) {
  Fail(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what);
}

int ParseInt(std::string_view s, std::size_t line, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ParseFail(line, std::string("bad integer in ") + what);
  }
  return v;
}

double ParseReal(std::string_view s, std::size_t line, const char* what) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    ParseFail(line, std::string("bad real in ") + what);
  }
  return v;
}

bool ParseBool(std::string_view s, std::size_t line, const char* what) {
  if (s == "0") return false;
  if (s == "1") return true;
  ParseFail(line, std::string("expected 0/1 in ") + what);
}

}  // namespace

std::vector<Candidate> CandidatesFromCsv(const std::string& text) {
  std::vector<Candidate> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) ParseFail(1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCandidateCsvHeader) ParseFail(1, "unexpected header");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitFields(line);
    if (f.size() != 14) ParseFail(line_no, "expected 14 fields");
    Candidate c;
    c.slide_id = std::string(f[0]);
    if (c.slide_id.empty()) ParseFail(line_no, "empty slide_id");
    c.x = ParseInt(f[1], line_no, "x");
    c.y = ParseInt(f[2], line_no, "y");
    if (c.x < 0 || c.y < 0) ParseFail(line_no, "negative coordinate");
    c.patch_size = ParseInt(f[3], line_no, "patch_size");
    if (c.patch_size <= 0) ParseFail(line_no, "patch_size must be positive");
    if (!f[4].empty()) c.h_mean = ParseReal(f[4], line_no, "h_mean");
    c.eligible = ParseBool(f[5], line_no, "eligible");
    c.sampled = ParseBool(f[6], line_no, "sampled");
    if (c.sampled && !c.eligible) ParseFail(line_no, "sampled but not eligible");
    if (!f[7].empty()) {
      c.class_label = ParsePatchClass(f[7]);
      if (!c.class_label) ParseFail(line_no, "unknown class_label");
    }
    int present = 0;
    std::array<double, kNumPatchClasses> probs{};
    for (int k = 0; k < kNumPatchClasses; ++k) {
      if (!f[8 + k].empty()) {
        probs[k] = ParseReal(f[8 + k], line_no, "class probability");
        ++present;
      }
    }
    if (present == kNumPatchClasses) {
      c.class_probs = probs;
    } else if (present != 0) {
      ParseFail(line_no, "class probabilities must be all present or absent");
    }
    if (!f[12].empty()) {
      c.til_count = ParseInt(f[12], line_no, "til_count");
      if (*c.til_count < 0) ParseFail(line_no, "negative til_count");
    }
    if (!f[13].empty()) {
      c.density_mm2 = ParseReal(f[13], line_no, "density_mm2");
      if (!c.til_count) ParseFail(line_no, "density without til_count");
    }
    out.push_back(std::move(c));
  }
  return out;
}

void persist_candidates(const std::vector<Candidate>& candidates,
                        const std::filesystem::path& path) {
  const std::string text = CandidatesToCsv(candidates);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

std::vector<Candidate> load_candidates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return CandidatesFromCsv(ss.str());
}

}  // namespace tilscore
