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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "captune/numcore/rng.hpp"

namespace captune::data {

enum class CaptionSource { kOriginal, kSynthetic };
enum class Split { kTrain, kVal, kTest };

std::string_view source_name(CaptionSource s) noexcept;
CaptionSource parse_source(std::string_view text);
std::string_view split_name(Split s) noexcept;
Split parse_split(std::string_view text);

struct Caption {
  std::string text;
  CaptionSource source = CaptionSource::kOriginal;
  std::string lang = "en";

  friend bool operator==(const Caption&, const Caption&) = default;
};

/// One image with its captions; the first caption is the original one.
struct Record {
  std::string id;
  std::vector<double> image;
  std::vector<Caption> captions;
  Split split = Split::kTrain;

  const Caption& original() const;
  friend bool operator==(const Record&, const Record&) = default;
};

/// One applied transform with its parameters, in application order.
struct ProvenanceEntry {
  std::string transform;
  std::vector<std::pair<std::string, std::string>> params;

  friend bool operator==(const ProvenanceEntry&, const ProvenanceEntry&) = default;
};

class Dataset {
 public:
  Dataset() = default;

  /// Throws IntegrityError on a duplicate id or a record without captions.
  void add(Record record);

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_.at(i); }

  const std::vector<ProvenanceEntry>& provenance() const noexcept { return provenance_; }
  void record_transform(ProvenanceEntry entry) { provenance_.push_back(std::move(entry)); }

  /// Indices of the records in `split`, ascending.
  std::vector<std::size_t> indices(Split split) const;
  /// New dataset with the records of `split` and this provenance.
  Dataset subset(Split split) const;

  /// Rebuilds the dataset from transformed records while keeping provenance.
  Dataset with_records(std::vector<Record> records) const;

 private:
  std::vector<Record> records_;
  std::vector<ProvenanceEntry> provenance_;
};

/// One JSON object per line. Blank lines are ignored. Throws ParseError with
/// the 1-based line number, IntegrityError on duplicate ids or missing
/// captions. Provenance starts with a "load" entry holding `source_label` and
/// the SHA-256 of `text`.
Dataset parse_dataset(std::string_view text, std::string_view source_label);
std::string serialize_dataset(const Dataset& ds);

/// File forms of the above; the provenance label is the file name.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Uniform draw over all captions of the record.
const Caption& sample_caption(const Record& record, numcore::Rng& rng);

/// Seeded shuffle of `indices` (perturbed by `epoch`) cut into contiguous
/// chunks. Throws ParameterError for batch_size == 0.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> indices,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch,
                                                   bool drop_last);

}  // namespace captune::data
