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

#include "captune/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "captune/error.hpp"
#include "captune/util/io.hpp"
#include "json.hpp"

namespace captune::data {

namespace {

using nlohmann::json;

Record parse_record(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
  try {
    Record r;
    r.id = j.at("id").get<std::string>();
    if (r.id.empty()) throw ParseError("record id must not be empty", line_no);
    for (const auto& v : j.at("image_feature")) {
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw ParseError("non-finite image feature", line_no);
      r.image.push_back(x);
    }
    if (j.contains("captions")) {
      for (const auto& c : j.at("captions")) {
        Caption cap;
        cap.text = c.at("text").get<std::string>();
        cap.source = parse_source(c.at("source").get<std::string>());
        cap.lang = c.at("lang").get<std::string>();
        if (cap.text.empty()) throw ParseError("caption text must not be empty", line_no);
        if (cap.lang.empty()) throw ParseError("caption lang must not be empty", line_no);
        r.captions.push_back(std::move(cap));
      }
    }
    r.split = parse_split(j.at("split").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid record: ") + e.what(), line_no);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), line_no);
  }
}

}  // namespace

std::string_view source_name(CaptionSource s) noexcept {
  return s == CaptionSource::kOriginal ? "original" : "synthetic";
}

CaptionSource parse_source(std::string_view text) {
  if (text == "original") return CaptionSource::kOriginal;
  if (text == "synthetic") return CaptionSource::kSynthetic;
  throw ConfigError("unknown caption source '" + std::string(text) + "'");
}

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

const Caption& Record::original() const {
  if (captions.empty()) throw IntegrityError("record '" + id + "' has no captions");
  return captions.front();
}

void Dataset::add(Record record) {
  if (record.captions.empty()) {
    throw IntegrityError("record '" + record.id + "' has no captions");
  }
  for (const auto& r : records_) {
    if (r.id == record.id) throw IntegrityError("duplicate record id '" + record.id + "'");
  }
  records_.push_back(std::move(record));
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].split == split) out.push_back(i);
  }
  return out;
}

Dataset Dataset::subset(Split split) const {
  Dataset out;
  out.provenance_ = provenance_;
  for (const auto& r : records_) {
    if (r.split == split) out.records_.push_back(r);
  }
  return out;
}

Dataset Dataset::with_records(std::vector<Record> records) const {
  Dataset out;
  out.provenance_ = provenance_;
  std::unordered_set<std::string> seen;
  for (auto& r : records) {
    if (r.captions.empty()) throw IntegrityError("record '" + r.id + "' has no captions");
    if (!seen.insert(r.id).second) throw IntegrityError("duplicate record id '" + r.id + "'");
  }
  out.records_ = std::move(records);
  return out;
}

Dataset parse_dataset(std::string_view text, std::string_view source_label) {
  Dataset ds;
  std::unordered_set<std::string> seen;
  std::vector<Record> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Record r = parse_record(line, line_no);
    if (r.captions.empty()) {
      throw IntegrityError("line " + std::to_string(line_no) + ": record '" + r.id +
                           "' has no captions");
    }
    if (!seen.insert(r.id).second) {
      throw IntegrityError("line " + std::to_string(line_no) + ": duplicate record id '" +
                           r.id + "'");
    }
    records.push_back(std::move(r));
  }
  ds = ds.with_records(std::move(records));
  ds.record_transform({"load",
                       {{"source", std::string(source_label)},
                        {"sha256", util::sha256_hex(text)}}});
  return ds;
}

std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& r : ds.records()) {
    json j;
    j["id"] = r.id;
    j["image_feature"] = r.image;
    json caps = json::array();
    for (const auto& c : r.captions) {
      caps.push_back({{"text", c.text},
                      {"source", std::string(source_name(c.source))},
                      {"lang", c.lang}});
    }
    j["captions"] = std::move(caps);
    j["split"] = std::string(split_name(r.split));
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(util::read_file(path), path.filename().string());
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  util::write_file(path, serialize_dataset(ds));
}

const Caption& sample_caption(const Record& record, numcore::Rng& rng) {
  if (record.captions.empty()) {
    throw DataError("record '" + record.id + "' has no captions");
  }
  if (record.captions.size() == 1) return record.captions.front();
  return record.captions[rng.uniform_index(record.captions.size())];
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> indices,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch,
                                                   bool drop_last) {
  if (batch_size == 0) throw ParameterError("batch size must be at least 1");
  numcore::Rng rng(numcore::mix_seed(seed, "shuffle", epoch));
  // Fisher-Yates with the unbiased index draw.
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(indices[i - 1], indices[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
    const std::size_t end = std::min(indices.size(), begin + batch_size);
    if (drop_last && end - begin < batch_size) break;
    batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                         indices.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace captune::data
