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
#include <string_view>

namespace tilscore {

/// Region classes painted into synthetic ground truth.
enum class TissueClass : std::uint8_t {
  kBackground = 0,
  kNecrosis = 1,
  kStroma = 2,
  kNormalLung = 3,
  kTumor = 4,
};

/// Patch classifier output classes. The enumerator order is the fixed
/// tie-break and column order everywhere.
enum class PatchClass : std::uint8_t {
  kNecrosis = 0,
  kStroma = 1,
  kNormalLung = 2,
  kTumor = 3,
};
inline constexpr int kNumPatchClasses = 4;
inline constexpr std::array<PatchClass, kNumPatchClasses> kPatchClasses = {
    PatchClass::kNecrosis, PatchClass::kStroma, PatchClass::kNormalLung,
    PatchClass::kTumor};

/// Nucleus classes of the PanNuke taxonomy.
enum class CellClass : std::uint8_t {
  kNeoplastic = 0,
  kInflammatory = 1,
  kConnective = 2,
  kDead = 3,
  kEpithelial = 4,
};

std::string_view Name(TissueClass c);
std::string_view Name(PatchClass c);
std::string_view Name(CellClass c);

std::optional<TissueClass> ParseTissueClass(std::string_view name);
std::optional<PatchClass> ParsePatchClass(std::string_view name);
std::optional<CellClass> ParseCellClass(std::string_view name);

/// Background has no patch-class counterpart.
std::optional<PatchClass> ToPatchClass(TissueClass c);

}  // namespace tilscore
