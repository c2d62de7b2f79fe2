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

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace tilscore {

/// How to reach a classification / quantification model.
struct BackendDescriptor {
  enum class Kind { kMock, kSubprocess, kHttp };
  Kind kind = Kind::kMock;
  std::string command;  // subprocess
  std::string url;      // http
  double timeout_s = 60.0;

  /// Parses the CLI form: "mock", "subprocess:CMD" or "http:URL".
  static BackendDescriptor Parse(const std::string& text);
  std::string ToString() const;
};

/// Every tunable of the pipeline. Loaded from a flat JSON object whose keys
/// are the field names; CLI flags override file values.
struct PipelineConfig {
  int patch_size = 768;
  double h_threshold = 0.017;
  double sampling_ratio = 0.05;
  double coverage_min = 0.5;
  int eval_dim = 96;
  std::uint64_t seed = 0;
  double clip_density = 10000.0;
  int thumbnail_max_dim = 1024;
  std::optional<std::array<double, 9>> stain_matrix;
  BackendDescriptor backend;

  // Runtime-only; excluded from the config hash because they never change
  // an output artifact.
  int workers = 1;
  bool tolerate_failures = false;

  /// Throws kConfig on a violated invariant.
  void validate() const;
};

PipelineConfig ConfigFromJson(const std::string& text);
PipelineConfig LoadConfig(const std::string& path);
std::string ConfigToJson(const PipelineConfig& cfg);

/// FNV-1a of the canonical JSON of all output-affecting fields, as 16 hex
/// digits.
std::string ConfigHash(const PipelineConfig& cfg);

}  // namespace tilscore
