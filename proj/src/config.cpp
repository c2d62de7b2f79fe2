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

#include "tilscore/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tilscore/error.hpp"
#include "tilscore/rng.hpp"

namespace tilscore {

using nlohmann::json;

BackendDescriptor BackendDescriptor::Parse(const std::string& text) {
  BackendDescriptor d;
  if (text == "mock") {
    d.kind = Kind::kMock;
  } else if (text.rfind("subprocess:", 0) == 0 && text.size() > 11) {
    d.kind = Kind::kSubprocess;
    d.command = text.substr(11);
  } else if (text.rfind("http:", 0) == 0 && text.size() > 5) {
    d.kind = Kind::kHttp;
    d.url = text.substr(5);
  } else {
    Fail(ErrorKind::kConfig, "backend must be mock, subprocess:CMD or http:URL");
  }
  return d;
}

std::string BackendDescriptor::ToString() const {
  switch (kind) {
    case Kind::kMock: return "mock";
    case Kind::kSubprocess: return "subprocess:" + command;
    case Kind::kHttp: return "http:" + url;
  }
  return "mock";
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorKind::kConfig, what); };
  if (patch_size < 64) bad("patch_size must be >= 64");
  if (!(h_threshold >= 0.0)) bad("h_threshold must be >= 0");
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    bad("sampling_ratio must be in (0, 1]");
  }
  if (!(coverage_min > 0.0 && coverage_min <= 1.0)) {
    bad("coverage_min must be in (0, 1]");
  }
  if (eval_dim < 16) bad("eval_dim must be >= 16");
  if (!(clip_density > 0.0)) bad("clip_density must be > 0");
  if (thumbnail_max_dim < 16) bad("thumbnail_max_dim must be >= 16");
  if (!(backend.timeout_s > 0.0)) bad("backend timeout_s must be > 0");
  if (workers < 1) bad("workers must be >= 1");
}

namespace {

json BackendToJson(const BackendDescriptor& b) {
  json j = {{"timeout_s", b.timeout_s}};
  switch (b.kind) {
    case BackendDescriptor::Kind::kMock: j["kind"] = "mock"; break;
    case BackendDescriptor::Kind::kSubprocess:
      j["kind"] = "subprocess";
      j["cmd"] = b.command;
      break;
    case BackendDescriptor::Kind::kHttp:
      j["kind"] = "http";
      j["url"] = b.url;
      break;
  }
  return j;
}

BackendDescriptor BackendFromJson(const json& j) {
  BackendDescriptor b;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mock") {
    b.kind = BackendDescriptor::Kind::kMock;
  } else if (kind == "subprocess") {
    b.kind = BackendDescriptor::Kind::kSubprocess;
    b.command = j.at("cmd").get<std::string>();
  } else if (kind == "http") {
    b.kind = BackendDescriptor::Kind::kHttp;
    b.url = j.at("url").get<std::string>();
  } else {
    Fail(ErrorKind::kConfig, "unknown backend kind " + kind);
  }
  b.timeout_s = j.value("timeout_s", b.timeout_s);
  return b;
}

json OutputFields(const PipelineConfig& c) {
  json j = {{"patch_size", c.patch_size},
            {"h_threshold", c.h_threshold},
            {"sampling_ratio", c.sampling_ratio},
            {"coverage_min", c.coverage_min},
            {"eval_dim", c.eval_dim},
            {"seed", c.seed},
            {"clip_density", c.clip_density},
            {"thumbnail_max_dim", c.thumbnail_max_dim},
            {"backend", BackendToJson(c.backend)}};
  if (c.stain_matrix) j["stain_matrix"] = *c.stain_matrix;
  return j;
}

}  // namespace

PipelineConfig ConfigFromJson(const std::string& text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) Fail(ErrorKind::kConfig, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "patch_size") c.patch_size = value.get<int>();
      else if (key == "h_threshold") c.h_threshold = value.get<double>();
      else if (key == "sampling_ratio") c.sampling_ratio = value.get<double>();
      else if (key == "coverage_min") c.coverage_min = value.get<double>();
      else if (key == "eval_dim") c.eval_dim = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "clip_density") c.clip_density = value.get<double>();
      else if (key == "thumbnail_max_dim") c.thumbnail_max_dim = value.get<int>();
      else if (key == "stain_matrix") c.stain_matrix = value.get<std::array<double, 9>>();
      else if (key == "backend") c.backend = BackendFromJson(value);
      else if (key == "workers") c.workers = value.get<int>();
      else if (key == "tolerate_failures") c.tolerate_failures = value.get<bool>();
      else Fail(ErrorKind::kConfig, "unknown config key " + key);
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kConfig, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromJson(ss.str());
}

std::string ConfigToJson(const PipelineConfig& cfg) {
  json j = OutputFields(cfg);
  j["workers"] = cfg.workers;
  j["tolerate_failures"] = cfg.tolerate_failures;
  return j.dump(2) + "\n";
}

std::string ConfigHash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    HashString(OutputFields(cfg).dump())));
  return buf;
}

}  // namespace tilscore
