// Copyright 2026 The morphinf Authors.
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

#include "morphinf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "morphinf/unicode.hpp"

namespace morphinf {

namespace {

using nlohmann::json;

static_assert(sizeof(float) == 4);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(bytes[i], bytes[sizeof(U) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(U));
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint: truncated payload");
  return to_little(v);
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("checkpoint " + path.string() + ": " + why);
}

}  // namespace

std::map<std::string, std::string> layout_flags() {
  return {
      {"gate_order", "input,forget,candidate,output"},
      {"weight_layout", "input_major"},
      {"feature_conditioning", "every_decoder_step"},
      {"decoder_initial_state", "encoder_final"},
      {"output_projection_input", "decoder_hidden"},
      {"sequence_loss", "mean_per_position"},
      {"unseen_feature_column", "last"},
  };
}

void save_checkpoint(const std::filesystem::path& path, const InflectionModel<float>& model,
                     const Vocabularies& vocabs, std::uint64_t seed) {
  json header;
  header["hidden_size"] = model.config().hidden_size;
  header["seed"] = seed;
  header["reserved_symbols"] = {"<pad>", "<s>", "</s>", "<unk>"};
  json chars = json::array();
  for (const char32_t c : vocabs.chars.symbols()) chars.push_back(to_utf8(std::u32string(1, c)));
  header["characters"] = chars;
  header["features"] = vocabs.features.tokens();
  header["layout"] = layout_flags();
  json params = json::array();
  const ParameterSet<float>& set = model.parameters();
  for (std::size_t i = 0; i < set.size(); ++i) {
    params.push_back({{"name", set[i].name}, {"shape", set[i].value.shape()}});
  }
  header["parameters"] = params;
  const std::string text = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out << kCheckpointMagic << '\n' << text.size() << '\n' << text;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Parameter<float>& p = set[i];
      put_u32(out, static_cast<std::uint32_t>(p.name.size()));
      out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
      put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
      for (const std::size_t d : p.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
      for (const float v : p.value.values()) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        put_u32(out, bits);
      }
    }
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string magic, size_line;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) corrupt(path, "not a morphinf checkpoint");
  std::getline(in, size_line);
  std::size_t header_size = 0;
  try {
    header_size = std::stoull(size_line);
  } catch (const std::exception&) {
    corrupt(path, "bad header length");
  }
  std::string text(header_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_size))) corrupt(path, "truncated header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(path, std::string("bad header: ") + e.what());
  }

  Vocabularies vocabs;
  for (const auto& c : header.at("characters")) {
    const std::u32string cp = nfc_codepoints(c.get<std::string>());
    if (cp.size() != 1) corrupt(path, "character entry is not a single codepoint");
    vocabs.chars.add(cp[0]);
  }
  for (const auto& f : header.at("features")) vocabs.features.add(f.get<std::string>());
  if (header.at("layout").get<std::map<std::string, std::string>>() != layout_flags()) {
    corrupt(path, "written with an incompatible model layout");
  }

  ModelConfig config;
  config.hidden_size = header.at("hidden_size").get<std::size_t>();
  config.char_vocab_size = vocabs.chars.size();
  config.feature_vocab_size = vocabs.features.size();
  Checkpoint ckpt{InflectionModel<float>(config, Initializer{}), std::move(vocabs),
                  header.at("seed").get<std::uint64_t>()};

  ParameterSet<float>& set = ckpt.model.parameters();
  const auto& listed = header.at("parameters");
  if (listed.size() != set.size()) corrupt(path, "parameter count mismatch");
  for (std::size_t i = 0; i < set.size(); ++i) {
    Parameter<float>& p = set[i];
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) corrupt(path, "truncated parameter name");
    if (name != p.name || listed[i].at("name").get<std::string>() != p.name) {
      corrupt(path, "expected parameter " + p.name + ", found " + name);
    }
    const std::uint32_t rank = get_u32(in);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get_u32(in));
    if (shape != p.value.shape()) {
      corrupt(path, "shape " + shape_string(shape) + " for " + name + ", expected " + shape_string(p.value.shape()));
    }
    for (float& v : p.value.values()) v = std::bit_cast<float>(get_u32(in));
  }
  return ckpt;
}

}  // namespace morphinf
