// Copyright 2026 The captune Authors
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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "captune/model/model.hpp"

namespace captune::model {

inline constexpr std::string_view kModelMagic = "CAPTUNE-MODEL";
inline constexpr int kModelFormatVersion = 1;

/// Free-form provenance (config hash, seed, stage) carried in the header.
using Lineage = std::map<std::string, std::string>;

struct ModelFile {
  Model model;
  Lineage lineage;
};

/// Layout:
///   line 1   "CAPTUNE-MODEL <version> <header_bytes>\n"
///   header   UTF-8 JSON of exactly header_bytes bytes with keys
///            format_version, config, vocabulary, adapters, saved_modules,
///            lineage, entries[{name, shape, offset, count}], payload_bytes
///   payload  row-major little-endian float32 values, entries back to back
/// Values are rounded to float32 on save.
std::string serialize_model(const Model& model, const Lineage& lineage = {});

/// Throws ParseError for a malformed container and IntegrityError when the
/// entries disagree with the configuration.
ModelFile parse_model(std::string_view bytes, std::string_view label = "model");

void save_model(const std::filesystem::path& path, const Model& model,
                const Lineage& lineage = {});
ModelFile load_model(const std::filesystem::path& path);

}  // namespace captune::model
