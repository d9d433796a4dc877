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

#include <stdexcept>
#include <string>
#include <string_view>

namespace captune {

/// Machine-readable error categories. The C API maps these one-to-one onto
/// `ct_status` codes, and the CLI prints the category name on failure.
enum class ErrorKind {
  kShape,
  kDegenerateVector,
  kContract,
  kNumeric,
  kConfiguration,
  kRank,
  kParameter,
  kData,
  kParse,
  kIntegrity,
  kIo,
  kUsage,
  kInternal,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CAPTUNE_DEFINE_ERROR(Name, Kind)                              \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

CAPTUNE_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
CAPTUNE_DEFINE_ERROR(DegenerateVectorError, ErrorKind::kDegenerateVector)
CAPTUNE_DEFINE_ERROR(ContractError, ErrorKind::kContract)
CAPTUNE_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
CAPTUNE_DEFINE_ERROR(ConfigError, ErrorKind::kConfiguration)
CAPTUNE_DEFINE_ERROR(RankError, ErrorKind::kRank)
CAPTUNE_DEFINE_ERROR(ParameterError, ErrorKind::kParameter)
CAPTUNE_DEFINE_ERROR(DataError, ErrorKind::kData)
CAPTUNE_DEFINE_ERROR(IntegrityError, ErrorKind::kIntegrity)
CAPTUNE_DEFINE_ERROR(IoError, ErrorKind::kIo)
CAPTUNE_DEFINE_ERROR(UsageError, ErrorKind::kUsage)
CAPTUNE_DEFINE_ERROR(InternalError, ErrorKind::kInternal)

#undef CAPTUNE_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::kParse,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace captune
