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
#include <utility>

#include "despec/image.hpp"

namespace despec {

// 8-bit PNG (gray or RGB, no alpha) for LDR: stored value = round(255 x).
Image load_png(const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

// Little-endian portable float map, bottom row first. Loaded as HDR.
Image load_pfm(const std::filesystem::path& path);
void save_pfm(const Image& img, const std::filesystem::path& path);

// Dispatch on extension (.png / .pfm).
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// Loads two images that must share a shape.
std::pair<Image, Image> load_pair(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace despec
