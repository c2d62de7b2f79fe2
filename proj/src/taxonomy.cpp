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

#include "tilscore/taxonomy.hpp"

namespace tilscore {

namespace {
constexpr std::array<std::string_view, 5> kTissueNames = {
    "background", "necrosis", "stroma", "normal_lung", "tumor"};
constexpr std::array<std::string_view, 4> kPatchNames = {
    "necrosis", "stroma", "normal_lung", "tumor"};
constexpr std::array<std::string_view, 5> kCellNames = {
    "neoplastic", "inflammatory", "connective", "dead", "epithelial"};

template <typename Enum, std::size_t N>
std::optional<Enum> Lookup(const std::array<std::string_view, N>& names,
                           std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  return std::nullopt;
}
}  // namespace

std::string_view Name(TissueClass c) {
  return kTissueNames[static_cast<std::size_t>(c)];
}
std::string_view Name(PatchClass c) {
  return kPatchNames[static_cast<std::size_t>(c)];
}
std::string_view Name(CellClass c) {
  return kCellNames[static_cast<std::size_t>(c)];
}

std::optional<TissueClass> ParseTissueClass(std::string_view name) {
  return Lookup<TissueClass>(kTissueNames, name);
}
std::optional<PatchClass> ParsePatchClass(std::string_view name) {
  return Lookup<PatchClass>(kPatchNames, name);
}
std::optional<CellClass> ParseCellClass(std::string_view name) {
  return Lookup<CellClass>(kCellNames, name);
}

std::optional<PatchClass> ToPatchClass(TissueClass c) {
  switch (c) {
    case TissueClass::kBackground: return std::nullopt;
    case TissueClass::kNecrosis: return PatchClass::kNecrosis;
    case TissueClass::kStroma: return PatchClass::kStroma;
    case TissueClass::kNormalLung: return PatchClass::kNormalLung;
    case TissueClass::kTumor: return PatchClass::kTumor;
  }
  return std::nullopt;
}

}  // namespace tilscore
