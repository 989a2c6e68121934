//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "despec/autodiff/tensor.hpp"

namespace despec::ad {

/// Portable checkpoint container.
///
/// Layout (all integers little-endian uint32 unless noted):
///   magic "DSPECNT1" (8 bytes), format version,
///   metadata byte length, metadata text ("key=value" lines, sorted by key),
///   tensor count, then per tensor:
///     name length, name bytes, rank (always 4), dims n c h w,
///     n*c*h*w little-endian IEEE-754 float32 values.
struct NamedTensors {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_tensors(const NamedTensors& contents);
NamedTensors deserialize_tensors(const std::string& bytes);

void save_tensors(const std::filesystem::path& path, const NamedTensors& contents);
NamedTensors load_tensors(const std::filesystem::path& path);

}  // namespace despec::ad
