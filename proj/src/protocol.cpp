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

#include "tilscore/protocol.hpp"

#include <sodium.h>

#include "json.hpp"
#include "tilscore/error.hpp"

namespace tilscore::protocol {

using nlohmann::json;

namespace {

void EnsureSodium() {
  static const int status = sodium_init();
  if (status < 0) Fail(ErrorKind::kIo, "libsodium failed to initialize");
}

std::string_view TaskName(Task t) {
  return t == Task::kClassify ? "classify" : "quantify";
}

json ParseMessage(const std::string& message) {
  try {
    json j = json::parse(message);
    if (!j.is_object()) Fail(ErrorKind::kProtocol, "message is not an object");
    return j;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed message: ") + e.what());
  }
}

template <typename T>
T Get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    Fail(ErrorKind::kProtocol, std::string("missing or invalid '") + key + "'");
  }
}

}  // namespace

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  EnsureSodium();
  const std::size_t len =
      sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop the terminator
  return out;
}

std::vector<std::uint8_t> Base64Decode(const std::string& text) {
  EnsureSodium();
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    Fail(ErrorKind::kProtocol, "invalid base64 payload");
  }
  out.resize(len);
  return out;
}

std::string EncodeRequest(const std::string& id, Task task,
                          const PixelBuffer& patch, double mpp) {
  const json j = {{"id", id},
                  {"task", TaskName(task)},
                  {"width", patch.width()},
                  {"height", patch.height()},
                  {"mpp", mpp},
                  {"pixels_b64", Base64Encode(patch.bytes())}};
  return j.dump();
}

std::string EncodeRequest(const Request& r) {
  const json j = {{"id", r.id},
                  {"task", TaskName(r.task)},
                  {"width", r.width},
                  {"height", r.height},
                  {"mpp", r.mpp},
                  {"pixels_b64", Base64Encode(r.pixels)}};
  return j.dump();
}

Request DecodeRequest(const std::string& message) {
  const json j = ParseMessage(message);
  Request r;
  r.id = Get<std::string>(j, "id");
  const auto task = Get<std::string>(j, "task");
  if (task == "classify") {
    r.task = Task::kClassify;
  } else if (task == "quantify") {
    r.task = Task::kQuantify;
  } else {
    Fail(ErrorKind::kProtocol, "unknown task " + task);
  }
  r.width = Get<int>(j, "width");
  r.height = Get<int>(j, "height");
  r.mpp = Get<double>(j, "mpp");
  r.pixels = Base64Decode(Get<std::string>(j, "pixels_b64"));
  if (r.width < 1 || r.height < 1 ||
      r.pixels.size() != 3 * static_cast<std::size_t>(r.width) * r.height) {
    Fail(ErrorKind::kProtocol, "pixel payload does not match width x height");
  }
  return r;
}

std::string EncodeClassifyResponse(const ClassifyResponse& r) {
  json probs = json::object();
  for (PatchClass c : kPatchClasses) {
    probs[std::string(Name(c))] = r.probs[static_cast<std::size_t>(c)];
  }
  return json{{"id", r.id}, {"probs", probs}}.dump();
}

std::string EncodeQuantifyResponse(const QuantifyResponse& r) {
  json cells = json::array();
  for (const CellInstance& c : r.cells) {
    cells.push_back({{"x", c.cx}, {"y", c.cy}, {"class", Name(c.cls)}});
  }
  return json{{"id", r.id}, {"cells", cells}}.dump();
}

ClassifyResponse DecodeClassifyResponse(const std::string& message) {
  const json j = ParseMessage(message);
  ClassifyResponse r;
  r.id = Get<std::string>(j, "id");
  const auto it = j.find("probs");
  if (it == j.end() || !it->is_object()) {
    Fail(ErrorKind::kProtocol, "missing 'probs' object");
  }
  for (PatchClass c : kPatchClasses) {
    const std::string key(Name(c));
    r.probs[static_cast<std::size_t>(c)] = Get<double>(*it, key.c_str());
  }
  return r;
}

QuantifyResponse DecodeQuantifyResponse(const std::string& message) {
  const json j = ParseMessage(message);
  QuantifyResponse r;
  r.id = Get<std::string>(j, "id");
  const auto it = j.find("cells");
  if (it == j.end() || !it->is_array()) {
    Fail(ErrorKind::kProtocol, "missing 'cells' array");
  }
  for (const json& c : *it) {
    if (!c.is_object()) Fail(ErrorKind::kProtocol, "cell is not an object");
    CellInstance cell;
    cell.cx = Get<double>(c, "x");
    cell.cy = Get<double>(c, "y");
    const auto cls = ParseCellClass(Get<std::string>(c, "class"));
    if (!cls) Fail(ErrorKind::kProtocol, "unknown cell class");
    cell.cls = *cls;
    r.cells.push_back(cell);
  }
  return r;
}

std::string PeekId(const std::string& message) {
  return Get<std::string>(ParseMessage(message), "id");
}

}  // namespace tilscore::protocol
