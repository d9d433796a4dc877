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

#include "captune/model/model_io.hpp"

#include <bit>
#include <cstring>
#include <set>
#include <sstream>

#include "captune/error.hpp"
#include "captune/util/io.hpp"
#include "json.hpp"

namespace captune::model {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "model payloads are written in host order");

json config_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"max_tokens", c.max_tokens},
          {"d_model", c.d_model},       {"n_layers", c.n_layers},
          {"mlp_ratio", c.mlp_ratio},   {"d_embed", c.d_embed},
          {"d_image", c.d_image},       {"init_std", c.init_std},
          {"init_temperature", c.init_temperature}};
}

EncoderConfig config_from(const json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
  c.d_embed = j.at("d_embed").get<std::size_t>();
  c.d_image = j.at("d_image").get<std::size_t>();
  c.init_std = j.at("init_std").get<double>();
  c.init_temperature = j.at("init_temperature").get<double>();
  return c;
}

std::string_view projection_tag(lora::Projection p) {
  return p == lora::Projection::kQuery ? "q" : "v";
}

lora::Projection projection_from(const std::string& s) {
  if (s == "q") return lora::Projection::kQuery;
  if (s == "v") return lora::Projection::kValue;
  throw IntegrityError("unknown adapter projection '" + s + "'");
}

template <class F>
void for_each_tensor(const Model& m, F&& visit) {
  m.params.for_each(visit);
  if (m.adapters) m.adapters->for_each(visit);
}

}  // namespace

std::string serialize_model(const Model& model, const Lineage& lineage) {
  json header;
  header["format_version"] = kModelFormatVersion;
  header["config"] = config_json(model.params.config);
  header["vocabulary"] = model.vocab.tokens();
  header["lineage"] = lineage;
  json adapters = json::array();
  json saved = json::array();
  if (model.adapters) {
    for (const auto& [t, a] : model.adapters->adapters()) {
      adapters.push_back({{"layer", t.layer},
                          {"projection", projection_tag(t.projection)},
                          {"rank", a.rank},
                          {"alpha", a.alpha},
                          {"dropout", a.dropout}});
    }
    saved = model.adapters->saved_modules();
  }
  header["adapters"] = adapters;
  header["saved_modules"] = saved;

  std::string payload;
  json entries = json::array();
  for_each_tensor(model, [&](const std::string& name, const Tensor& t) {
    entries.push_back({{"name", name},
                       {"shape", t.shape()},
                       {"offset", payload.size()},
                       {"count", t.size()}});
    for (double v : t.data()) {
      const float f = static_cast<float>(v);
      char buf[sizeof(float)];
      std::memcpy(buf, &f, sizeof f);
      payload.append(buf, sizeof buf);
    }
  });
  header["entries"] = entries;
  header["payload_bytes"] = payload.size();

  const std::string text = header.dump();
  std::string out = std::string(kModelMagic) + " " + std::to_string(kModelFormatVersion) + " " +
                    std::to_string(text.size()) + "\n";
  out += text;
  out += payload;
  return out;
}

ModelFile parse_model(std::string_view bytes, std::string_view label) {
  const std::string where(label);
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw ParseError(where + ": missing model preamble", 1);
  std::istringstream pre{std::string(bytes.substr(0, eol))};
  std::string magic;
  int version = 0;
  std::size_t header_bytes = 0;
  if (!(pre >> magic >> version >> header_bytes) || magic != kModelMagic) {
    throw ParseError(where + ": not a model file", 1);
  }
  if (version != kModelFormatVersion) {
    throw ParseError(where + ": unsupported format version " + std::to_string(version), 1);
  }
  if (bytes.size() < eol + 1 + header_bytes) {
    throw ParseError(where + ": truncated header", 2);
  }
  json header;
  try {
    header = json::parse(bytes.substr(eol + 1, header_bytes));
  } catch (const json::exception& e) {
    throw ParseError(where + ": header is not valid JSON (" + e.what() + ")", 2);
  }
  const std::string_view payload = bytes.substr(eol + 1 + header_bytes);

  ModelFile file;
  try {
    Model& m = file.model;
    const EncoderConfig cfg = config_from(header.at("config"));
    cfg.validate();
    m.vocab = Vocabulary::from_tokens(header.at("vocabulary").get<std::vector<std::string>>());
    if (m.vocab.size() != cfg.vocab_size) {
      throw IntegrityError(where + ": vocabulary has " + std::to_string(m.vocab.size()) +
                           " tokens, config says " + std::to_string(cfg.vocab_size));
    }
    m.params = DualEncoderParams::init(cfg, 0);
    const auto& adapters = header.at("adapters");
    if (!adapters.empty()) {
      lora::AdapterSet set;
      for (const auto& a : adapters) {
        lora::Target t{a.at("layer").get<std::size_t>(),
                       projection_from(a.at("projection").get<std::string>())};
        const Tensor* base = m.params.find(t.base_name());
        if (base == nullptr) throw IntegrityError(where + ": adapter on unknown " + t.base_name());
        lora::Adapter ad = lora::init_adapter(base->rows(), base->cols(),
                                              a.at("rank").get<std::size_t>(),
                                              a.at("alpha").get<double>(), 0, t);
        ad.dropout = a.at("dropout").get<double>();
        set.add(std::move(ad));
      }
      set.set_saved_modules(header.at("saved_modules").get<std::vector<std::string>>());
      m.adapters = std::move(set);
    }
    file.lineage = header.at("lineage").get<Lineage>();

    std::map<std::string, Tensor*> slots;
    m.params.for_each([&](const std::string& n, Tensor& t) { slots[n] = &t; });
    if (m.adapters) m.adapters->for_each([&](const std::string& n, Tensor& t) { slots[n] = &t; });

    if (header.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw IntegrityError(where + ": payload is " + std::to_string(payload.size()) +
                           " bytes, header says " +
                           header.at("payload_bytes").dump());
    }
    std::set<std::string> seen;
    for (const auto& e : header.at("entries")) {
      const auto name = e.at("name").get<std::string>();
      auto it = slots.find(name);
      if (it == slots.end()) throw IntegrityError(where + ": unexpected entry '" + name + "'");
      if (!seen.insert(name).second) throw IntegrityError(where + ": duplicate entry '" + name + "'");
      Tensor& t = *it->second;
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      if (shape != t.shape()) {
        throw IntegrityError(where + ": entry '" + name + "' has shape " +
                             numcore::shape_string(shape) + ", config implies " +
                             numcore::shape_string(t.shape()));
      }
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      if (count != t.size() || offset + count * sizeof(float) > payload.size()) {
        throw IntegrityError(where + ": entry '" + name + "' exceeds the payload");
      }
      for (std::size_t i = 0; i < count; ++i) {
        float f = 0.0f;
        std::memcpy(&f, payload.data() + offset + i * sizeof(float), sizeof f);
        t[i] = static_cast<double>(f);
      }
    }
    if (seen.size() != slots.size()) {
      for (const auto& [n, _] : slots) {
        if (!seen.contains(n)) throw IntegrityError(where + ": missing entry '" + n + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where + ": malformed header field (" + e.what() + ")", 2);
  }
  return file;
}

void save_model(const std::filesystem::path& path, const Model& model, const Lineage& lineage) {
  util::write_file(path, serialize_model(model, lineage));
}

ModelFile load_model(const std::filesystem::path& path) {
  return parse_model(util::read_file(path), path.filename().string());
}

}  // namespace captune::model
