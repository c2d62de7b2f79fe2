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
#include <span>
#include <string>
#include <vector>

#include "tilscore/image.hpp"
#include "tilscore/inference.hpp"

// Wire format shared by the subprocess and HTTP backends. Each message is one
// compact JSON object with lexicographically ordered keys:
//
//   request   {"height","id","mpp","pixels_b64","task","width"}
//             task is "classify" or "quantify"; pixels_b64 is base64 of the
//             row-major RGB bytes.
//   classify  {"id","probs":{"necrosis","normal_lung","stroma","tumor"}}
//   quantify  {"cells":[{"class","x","y"}],"id"}
//
// Over a subprocess each message is followed by '\n'.

namespace tilscore::protocol {

enum class Task { kClassify, kQuantify };

struct Request {
  std::string id;
  Task task = Task::kClassify;
  int width = 0;
  int height = 0;
  double mpp = 0.0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  friend bool operator==(const Request&, const Request&) = default;
};

struct ClassifyResponse {
  std::string id;
  ClassProbs probs{};
};

struct QuantifyResponse {
  std::string id;
  std::vector<CellInstance> cells;
};

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(const std::string& text);

std::string EncodeRequest(const std::string& id, Task task,
                          const PixelBuffer& patch, double mpp);
std::string EncodeRequest(const Request& request);
Request DecodeRequest(const std::string& message);

std::string EncodeClassifyResponse(const ClassifyResponse& response);
std::string EncodeQuantifyResponse(const QuantifyResponse& response);

/// Missing keys, wrong types or unknown classes are kProtocol errors.
/// Probabilities are returned as sent; see NormalizeProbs.
ClassifyResponse DecodeClassifyResponse(const std::string& message);
QuantifyResponse DecodeQuantifyResponse(const std::string& message);

/// The "id" member of any message, or kProtocol.
std::string PeekId(const std::string& message);

}  // namespace tilscore::protocol
