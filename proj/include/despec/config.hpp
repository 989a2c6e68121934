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
#include <string>

#include "despec/metrics.hpp"
#include "despec/pipeline/train.hpp"
#include "despec/synthgen.hpp"
#include "despec/tonecorrect.hpp"

namespace despec {

struct EvalConfig {
  EvalTarget target = EvalTarget::DiffuseTc;
  std::string split = "test";
};

/// Settings for every workflow, read from an INI document with the
/// sections [synth], [tone], [train] and [eval]. Absent keys keep their
/// defaults; unknown sections or keys are rejected.
struct Config {
  SynthConfig synth;
  ToneCorrectOptions tone;
  pipeline::TrainConfig train;
  EvalConfig eval;
};

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

/// Canonical INI text listing every key. Parsing it yields the same Config.
std::string serialize_config(const Config& config);

/// 16 hex digits of the FNV-1a 64-bit hash of the canonical text.
std::string config_hash(const Config& config);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace despec
